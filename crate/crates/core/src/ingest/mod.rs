//! Sensor-log ingestion: CSV tables, min-max normalization, the synthetic
//! time counter and pressure-curve feature extraction.

mod csv;
mod pulse;

pub use self::csv::{parse_csv, CsvOptions, DroppedRow, ParsedCsv};
pub use self::pulse::{extract_pulse_features, PulseCurve, PulseFeatures};

use crate::error::{Error, Result};

/// Raw ranges narrower than this are treated as constant.
pub const QUASI_CONSTANT_EPS: f64 = 1e-9;

/// Normalized value assigned to every entry of a quasi-constant attribute.
pub const QUASI_CONSTANT_LEVEL: f64 = 0.5;

/// The 27 logged attributes of the swirl-evaporator refrigeration test stand,
/// in logging order.
pub const SWIRL_EVAPORATOR_ATTRIBUTES: [&str; 27] = [
    "Time",
    "Mass flux",
    "Density of the liquid",
    "Temperature after subcooling",
    "Low pressure after swirl evaporator",
    "Evaporation pressure",
    "Temperature before subcooling",
    "Temperature after superheating",
    "Condensation temperature",
    "Evaporation temperature",
    "Thermostat output temperature",
    "Glycol input temperature",
    "Glycol output temperature",
    "Condensation pressure",
    "Pressure after superheating",
    "Temperature thermocouple 1",
    "Temperature thermocouple 2",
    "Temperature thermocouple 3",
    "Temperature thermocouple 4",
    "Thermostat input",
    "Temperature after the compressor",
    "Actual power",
    "Target power",
    "Mean value of radial temperature (thermocouple 1 to 4)",
    "Mass flow low pass filtered",
    "Face temperature of the swirl evaporator cavity (thermocouple 5)",
    "Room temperature",
];

/// One column of a sensor log together with its observed raw range.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSpec {
    pub name: String,
    pub index: usize,
    pub raw_min: f64,
    pub raw_max: f64,
    pub quasi_constant: bool,
}

impl AttributeSpec {
    /// Spec for a column with the given observed range.
    pub fn new(name: impl Into<String>, index: usize, raw_min: f64, raw_max: f64) -> Result<Self> {
        let name = name.into();
        validate_name(&name, index)?;
        if !(raw_min.is_finite() && raw_max.is_finite()) || raw_min > raw_max {
            return Err(Error::InvalidArgument(format!(
                "attribute {name:?}: invalid range [{raw_min}, {raw_max}]"
            )));
        }
        Ok(AttributeSpec {
            name,
            index,
            raw_min,
            raw_max,
            quasi_constant: raw_max - raw_min < QUASI_CONSTANT_EPS,
        })
    }

    pub fn range(&self) -> f64 {
        self.raw_max - self.raw_min
    }

    /// Map a raw value into `[0, 1]`, clamping values outside the stored
    /// range. The flag is true when clamping happened.
    pub fn normalize_value(&self, v: f64) -> (f64, bool) {
        let clamped = v < self.raw_min || v > self.raw_max;
        if self.quasi_constant {
            return (QUASI_CONSTANT_LEVEL, clamped);
        }
        let t = (v - self.raw_min) / self.range();
        (t.clamp(0.0, 1.0), clamped)
    }
}

pub(crate) fn validate_name(name: &str, column: usize) -> Result<()> {
    if name.is_empty() {
        return Err(Error::Schema {
            column,
            reason: "empty attribute name".into(),
        });
    }
    if name.chars().any(char::is_control) {
        return Err(Error::Schema {
            column,
            reason: format!("attribute name {name:?} contains control characters"),
        });
    }
    Ok(())
}

/// Map a normalized value back to raw units.
pub fn denormalize(value: f64, spec: &AttributeSpec) -> Result<f64> {
    if spec.quasi_constant {
        return Err(Error::Undefined(format!(
            "attribute {:?} is quasi-constant; its normalization cannot be inverted",
            spec.name
        )));
    }
    Ok(spec.raw_min + value * spec.range())
}

/// Rectangular table of finite raw values, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    schema: Vec<AttributeSpec>,
    values: Vec<f64>,
}

impl DataTable {
    /// Build a table from column names and row-major values. Attribute
    /// ranges are taken from the observed data.
    pub fn new<S: AsRef<str>>(names: &[S], values: Vec<f64>) -> Result<Self> {
        let dim = names.len();
        if dim == 0 {
            return Err(Error::Empty("table has no columns"));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::Dimension {
                expected: dim,
                actual: values.len() % dim,
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                location: crate::error::Location {
                    row: Some(pos / dim + 1),
                    column: Some(pos % dim + 1),
                },
                reason: format!("non-finite value {}", values[pos]),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for (i, n) in names.iter().enumerate() {
            if !seen.insert(n.as_ref()) {
                return Err(Error::Schema {
                    column: i + 1,
                    reason: format!("duplicate attribute name {:?}", n.as_ref()),
                });
            }
        }
        let n_rows = values.len() / dim;
        let schema = names
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let (lo, hi) = if n_rows == 0 {
                    (0.0, 0.0)
                } else {
                    (0..n_rows)
                        .map(|r| values[r * dim + j])
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                            (lo.min(v), hi.max(v))
                        })
                };
                AttributeSpec::new(name.as_ref(), j, lo, hi)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DataTable { schema, values })
    }

    pub fn schema(&self) -> &[AttributeSpec] {
        &self.schema
    }

    pub fn names(&self) -> Vec<&str> {
        self.schema.iter().map(|a| a.name.as_str()).collect()
    }

    pub fn dim(&self) -> usize {
        self.schema.len()
    }

    pub fn n_rows(&self) -> usize {
        self.values.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim())
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[j])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Prepend a synthetic `Time` column counting `0, period, 2*period, ...`.
    /// A time-dependent attribute then shows up as a component plane that
    /// correlates with the counter's plane.
    pub fn append_time_counter(&self, period: f64) -> Result<DataTable> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::out_of_range("time counter period", period, "> 0"));
        }
        let mut names = vec!["Time".to_string()];
        names.extend(self.schema.iter().map(|a| a.name.clone()));
        let dim = self.dim();
        let mut values = Vec::with_capacity(self.n_rows() * (dim + 1));
        for (i, row) in self.rows().enumerate() {
            values.push(i as f64 * period);
            values.extend_from_slice(row);
        }
        DataTable::new(&names, values)
    }

    /// Min-max normalize every attribute into `[0, 1]` using the observed
    /// range. Quasi-constant attributes map to 0.5.
    pub fn normalize(&self) -> Result<NormalizedTable> {
        if self.is_empty() {
            return Err(Error::Empty("cannot normalize a table without rows"));
        }
        for a in self.schema.iter().filter(|a| a.quasi_constant) {
            log::warn!(
                "attribute {:?} is quasi-constant (range {:e}); normalized to {}",
                a.name,
                a.range(),
                QUASI_CONSTANT_LEVEL
            );
        }
        let dim = self.dim();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| self.schema[i % dim].normalize_value(v).0)
            .collect();
        Ok(NormalizedTable {
            schema: self.schema.clone(),
            values,
        })
    }
}

/// A table with every value in `[0, 1]`, plus the raw ranges needed to
/// invert the mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedTable {
    schema: Vec<AttributeSpec>,
    values: Vec<f64>,
}

impl NormalizedTable {
    /// Wrap already-normalized values. Every value must lie in `[0, 1]`.
    pub fn from_normalized(schema: Vec<AttributeSpec>, values: Vec<f64>) -> Result<Self> {
        let dim = schema.len();
        if dim == 0 {
            return Err(Error::Empty("table has no columns"));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::Dimension {
                expected: dim,
                actual: values.len() % dim,
            });
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::out_of_range("normalized value", v, "[0, 1]"));
        }
        Ok(NormalizedTable { schema, values })
    }

    pub fn schema(&self) -> &[AttributeSpec] {
        &self.schema
    }

    pub fn dim(&self) -> usize {
        self.schema.len()
    }

    pub fn n_rows(&self) -> usize {
        self.values.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Invert the normalization of one row.
    pub fn denormalize_row(&self, i: usize) -> Result<Vec<f64>> {
        self.row(i)
            .iter()
            .zip(&self.schema)
            .map(|(&v, a)| denormalize(v, a))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn normalization_endpoints_and_midrange() {
        let t = DataTable::new(&["p"], vec![1.0, 12.0, 6.0]).unwrap();
        let n = t.normalize().unwrap();
        assert_eq!(n.values()[0], 0.0);
        assert_eq!(n.values()[1], 1.0);
        assert_relative_eq!(n.values()[2], 5.0 / 11.0, epsilon = 1e-15);
        assert_relative_eq!(n.values()[2], 0.4545, epsilon = 1e-4);
    }

    #[test]
    fn constant_column_is_quasi_constant() {
        let t = DataTable::new(&["c", "x"], vec![10.0, 1.0, 10.0, 2.0, 10.0, 3.0]).unwrap();
        assert!(t.schema()[0].quasi_constant);
        assert!(!t.schema()[1].quasi_constant);
        let n = t.normalize().unwrap();
        assert!(n.rows().all(|r| r[0] == 0.5));
        assert!(denormalize(0.5, &n.schema()[0]).is_err());
    }

    #[test]
    fn bit_wiggle_below_tolerance_is_quasi_constant() {
        let t = DataTable::new(&["c"], vec![10.0, 10.0 + 5e-10]).unwrap();
        assert!(t.schema()[0].quasi_constant);
        let t = DataTable::new(&["c"], vec![10.0, 10.0 + 1e-8]).unwrap();
        assert!(!t.schema()[0].quasi_constant);
    }

    #[test]
    fn empty_table_cannot_be_normalized() {
        let t = DataTable::new(&["a", "b"], vec![]).unwrap();
        assert!(matches!(t.normalize(), Err(Error::Empty(_))));
    }

    #[test]
    fn denormalize_examples() {
        let a = AttributeSpec::new("p", 0, 1.0, 12.0).unwrap();
        assert_eq!(denormalize(0.0, &a).unwrap(), 1.0);
        assert_eq!(denormalize(1.0, &a).unwrap(), 12.0);
        let b = AttributeSpec::new("q", 0, 10.0, 20.0).unwrap();
        assert_eq!(denormalize(0.5, &b).unwrap(), 15.0);
    }

    #[test]
    fn values_outside_range_are_clamped_and_flagged() {
        let a = AttributeSpec::new("p", 0, 1.0, 12.0).unwrap();
        assert_eq!(a.normalize_value(13.0), (1.0, true));
        assert_eq!(a.normalize_value(0.0), (0.0, true));
        assert_eq!(a.normalize_value(12.0), (1.0, false));
    }

    #[test]
    fn rejects_invalid_tables() {
        assert!(DataTable::new(&["a", "a"], vec![1.0, 2.0]).is_err());
        assert!(DataTable::new(&["a", "b"], vec![1.0, 2.0, 3.0]).is_err());
        assert!(DataTable::new(&["a"], vec![f64::NAN]).is_err());
        assert!(DataTable::new(&[""], vec![1.0]).is_err());
        assert!(DataTable::new::<&str>(&[], vec![]).is_err());
    }

    #[test]
    fn time_counter_examples() {
        let t = DataTable::new(&["x"], vec![5.0, 6.0, 7.0]).unwrap();
        let c = t.append_time_counter(0.5).unwrap();
        assert_eq!(c.names(), vec!["Time", "x"]);
        assert_eq!(c.column(0).collect::<Vec<_>>(), vec![0.0, 0.5, 1.0]);
        assert_eq!(c.column(1).collect::<Vec<_>>(), vec![5.0, 6.0, 7.0]);
        assert_eq!(c.schema()[1].index, 1);

        let one = DataTable::new(&["x"], vec![5.0]).unwrap();
        assert_eq!(one.append_time_counter(0.5).unwrap().row(0), &[0.0, 5.0]);

        assert!(t.append_time_counter(0.0).is_err());
        assert!(c.append_time_counter(1.0).is_err(), "duplicate Time column");
    }

    #[test]
    fn evaporator_schema_has_27_unique_names() {
        let set: std::collections::HashSet<_> = SWIRL_EVAPORATOR_ATTRIBUTES.iter().collect();
        assert_eq!(set.len(), 27);
        assert_eq!(SWIRL_EVAPORATOR_ATTRIBUTES[0], "Time");
        assert_eq!(SWIRL_EVAPORATOR_ATTRIBUTES[26], "Room temperature");
    }

    proptest! {
        #[test]
        fn normalize_roundtrip(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 2..40)) {
            let values: Vec<f64> = rows.concat();
            let t = DataTable::new(&["a", "b", "c"], values).unwrap();
            let n = t.normalize().unwrap();
            for (j, a) in n.schema().iter().enumerate() {
                let col: Vec<f64> = n.rows().map(|r| r[j]).collect();
                prop_assert!(col.iter().all(|v| (0.0..=1.0).contains(v)));
                if a.quasi_constant {
                    continue;
                }
                prop_assert!(col.contains(&0.0));
                prop_assert!(col.contains(&1.0));
                for (i, &v) in col.iter().enumerate() {
                    let raw = t.row(i)[j];
                    let back = denormalize(v, a).unwrap();
                    prop_assert!((back - raw).abs() <= 1e-12 * raw.abs().max(1.0));
                }
            }
        }

        #[test]
        fn time_counter_is_affine(n in 1usize..50, period in 1e-3f64..10.0) {
            let t = DataTable::new(&["x"], vec![1.0; n]).unwrap();
            let c = t.append_time_counter(period).unwrap();
            let time: Vec<f64> = c.column(0).collect();
            for (i, v) in time.iter().enumerate() {
                prop_assert_eq!(*v, i as f64 * period);
            }
            prop_assert!(time.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
