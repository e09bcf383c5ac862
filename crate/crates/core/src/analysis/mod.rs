//! Post-training analytics over a [`SomModel`].

mod cluster;
mod kmeans;

pub use cluster::{
    cluster_stats, kmeans_codebook, kmeans_codebook_with, predict_forward, predict_reverse,
    AttributeRange, AttributeStats, ClusterModel, ClusterStats, ForwardPrediction, KMeansParams,
    DEFAULT_RESTARTS,
};
pub use kmeans::{kmeans, KMeans};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ingest::{AttributeSpec, DataTable};
use crate::som::SomModel;

/// Planes with |r| at or above this are reported as correlated.
pub const CORRELATION_THRESHOLD: f64 = 0.8;

/// The neuron a data row maps to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmuAssignment {
    pub row: usize,
    pub neuron: usize,
    pub distance: f64,
    /// At least one value fell outside the training range and was clamped.
    pub clamped: bool,
}

/// Normalize a raw row with the model's stored ranges.
pub(crate) fn normalize_row(schema: &[AttributeSpec], row: &[f64]) -> (Vec<f64>, bool) {
    let mut clamped = false;
    let values = schema
        .iter()
        .zip(row)
        .map(|(a, &v)| {
            let (t, c) = a.normalize_value(v);
            clamped |= c;
            t
        })
        .collect();
    (values, clamped)
}

fn require_schema(model: &SomModel) -> Result<&[AttributeSpec]> {
    if model.schema().len() != model.dim() {
        return Err(Error::InvalidArgument(
            "model carries no attribute schema".into(),
        ));
    }
    Ok(model.schema())
}

/// Check that `table` has exactly the model's columns, in order.
pub(crate) fn check_columns(model: &SomModel, table: &DataTable) -> Result<()> {
    let schema = require_schema(model)?;
    for (i, a) in schema.iter().enumerate() {
        match table.schema().get(i) {
            Some(t) if t.name == a.name => {}
            Some(t) => {
                return Err(Error::Schema {
                    column: i + 1,
                    reason: format!("expected {:?}, found {:?}", a.name, t.name),
                })
            }
            None => {
                return Err(Error::Schema {
                    column: i + 1,
                    reason: format!("missing attribute {:?}", a.name),
                })
            }
        }
    }
    if table.dim() > schema.len() {
        return Err(Error::Schema {
            column: schema.len() + 1,
            reason: format!("unexpected attribute {:?}", table.schema()[schema.len()].name),
        });
    }
    Ok(())
}

pub fn classify(model: &SomModel, table: &DataTable) -> Result<Vec<BmuAssignment>> {
    classify_with(model, table, Execution::default())
}

/// Map every raw row to its best matching unit. Rows are normalized with
/// the training ranges; out-of-range values are clamped and flagged.
pub fn classify_with(
    model: &SomModel,
    table: &DataTable,
    exec: Execution,
) -> Result<Vec<BmuAssignment>> {
    check_columns(model, table)?;
    let schema = model.schema();
    let out = exec.map_collect(table.n_rows(), |row| {
        let (x, clamped) = normalize_row(schema, table.row(row));
        let bmu = model
            .find_bmu_with(&x, None, Execution::Sequential)
            .expect("row width checked against schema");
        BmuAssignment {
            row,
            neuron: bmu.index,
            distance: bmu.distance,
            clamped,
        }
    });
    Ok(out)
}

/// One attribute's weight across all neurons, laid out on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentPlane {
    pub attribute: usize,
    pub width: usize,
    pub height: usize,
    /// Row-major, `values[row * width + col]`, normalized units.
    pub values: Vec<f64>,
}

impl ComponentPlane {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }
}

pub fn component_plane(model: &SomModel, attribute: usize) -> Result<ComponentPlane> {
    if attribute >= model.dim() {
        return Err(Error::out_of_range(
            "attribute index",
            attribute,
            format!("< {}", model.dim()),
        ));
    }
    let values = model
        .weights()
        .chunks_exact(model.dim())
        .map(|w| w[attribute])
        .collect();
    Ok(ComponentPlane {
        attribute,
        width: model.grid().width(),
        height: model.grid().height(),
        values,
    })
}

pub fn component_planes(model: &SomModel) -> Vec<ComponentPlane> {
    (0..model.dim())
        .map(|a| component_plane(model, a).expect("attribute in range"))
        .collect()
}

/// Pearson coefficients between every pair of component planes. Entries
/// that involve a constant plane are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub names: Vec<String>,
    values: Vec<Option<f64>>,
}

impl CorrelationReport {
    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.dim() + j]
    }

    /// Attribute pairs `(i, j, r)` with `i < j` and `|r| >= threshold`.
    pub fn correlated_pairs(&self, threshold: f64) -> Vec<(usize, usize, f64)> {
        let n = self.dim();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter_map(|(i, j)| self.get(i, j).map(|r| (i, j, r)))
            .filter(|(_, _, r)| r.abs() >= threshold)
            .collect()
    }

    /// Matrix with attribute names as header row and first column; invalid
    /// entries are empty cells.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (i, name) in self.names.iter().enumerate() {
            let mut rec = vec![name.clone()];
            rec.extend((0..self.dim()).map(|j| self.get(i, j).map(|r| r.to_string()).unwrap_or_default()));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }
}

pub fn plane_correlation(model: &SomModel) -> Result<CorrelationReport> {
    let n = model.n_neurons();
    if n < 2 {
        return Err(Error::Undefined(
            "plane correlation needs at least two neurons".into(),
        ));
    }
    if model.dim() < 2 {
        return Err(Error::Undefined(
            "plane correlation needs at least two attributes".into(),
        ));
    }
    let dim = model.dim();
    let planes = component_planes(model);
    let centered: Vec<Vec<f64>> = planes
        .iter()
        .map(|p| {
            let mean = p.values.iter().sum::<f64>() / n as f64;
            p.values.iter().map(|v| v - mean).collect()
        })
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let var: Vec<f64> = centered.iter().map(|c| dot(c, c)).collect();
    let mut values = vec![None; dim * dim];
    for i in 0..dim {
        for j in i..dim {
            if var[i] > 0.0 && var[j] > 0.0 {
                let r = (dot(&centered[i], &centered[j]) / (var[i] * var[j]).sqrt()).clamp(-1.0, 1.0);
                values[i * dim + j] = Some(r);
                values[j * dim + i] = Some(r);
            }
        }
    }
    let names = if model.schema().len() == dim {
        model.schema().iter().map(|a| a.name.clone()).collect()
    } else {
        (0..dim).map(|i| format!("attr_{i}")).collect()
    };
    Ok(CorrelationReport { names, values })
}

/// Assignments as CSV: `row,neuron,cluster,distance,clamped`. The cluster
/// column is empty without a cluster model.
pub fn assignments_to_csv(assignments: &[BmuAssignment], clusters: Option<&ClusterModel>) -> String {
    let mut out = String::from("row,neuron,cluster,distance,clamped\n");
    for a in assignments {
        let cluster = clusters
            .and_then(|c| c.neuron_labels.get(a.neuron))
            .map(|l| l.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            a.row,
            a.neuron,
            cluster,
            a.distance,
            u8::from(a.clamped)
        ));
    }
    out
}
