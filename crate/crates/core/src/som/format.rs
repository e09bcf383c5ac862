//! Plain-text model files.
//!
//! ```text
//! som-atlas-model v1
//! grid <width> <height> odd-r
//! dim <n>
//! schedule epochs=<E> alpha0=<a> alpha_end=<a> sigma0=<s> shuffle=<0|1> seed=<u64>
//! attr <index> <name> <raw_min> <raw_max> <quasi_constant 0|1>     (n lines)
//! w <idx> <v0> ... <v(n-1)>                                        (width*height lines)
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so writing a loaded file
//! reproduces it byte for byte. Attribute names may contain spaces; they are
//! recovered by peeling the index off the front and three fields off the back.

use std::fmt::Write as _;
use std::str::FromStr;

use super::{SomModel, TrainingSchedule};
use crate::error::{Error, Result};
use crate::hexgrid::HexGrid;
use crate::ingest::AttributeSpec;

pub const MAGIC: &str = "som-atlas-model v1";

impl SomModel {
    /// Serialize a trained model. Fails when the schema or schedule is missing.
    pub fn to_text(&self) -> Result<String> {
        let schedule = self.schedule.as_ref().ok_or_else(|| {
            Error::InvalidArgument("model has no training schedule to record".into())
        })?;
        if self.schema.len() != self.dim {
            return Err(Error::InvalidArgument(
                "model has no attribute schema to record".into(),
            ));
        }
        let mut out = String::new();
        writeln!(out, "{MAGIC}").unwrap();
        writeln!(out, "grid {} {} odd-r", self.grid.width(), self.grid.height()).unwrap();
        writeln!(out, "dim {}", self.dim).unwrap();
        writeln!(
            out,
            "schedule epochs={} alpha0={} alpha_end={} sigma0={} shuffle={} seed={}",
            schedule.epochs,
            schedule.alpha0,
            schedule.alpha_end,
            schedule.sigma0,
            u8::from(schedule.shuffle),
            schedule.seed
        )
        .unwrap();
        for a in &self.schema {
            writeln!(
                out,
                "attr {} {} {} {} {}",
                a.index,
                a.name,
                a.raw_min,
                a.raw_max,
                u8::from(a.quasi_constant)
            )
            .unwrap();
        }
        for v in 0..self.n_neurons() {
            write!(out, "w {v}").unwrap();
            for w in self.neuron(v) {
                write!(out, " {w}").unwrap();
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<SomModel> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| Error::Format {
                line: text.lines().count() + 1,
                reason: format!("unexpected end of file, expected {what}"),
            })
        };

        let (n, line) = next("header")?;
        if line != MAGIC {
            return Err(bad(n, format!("expected {MAGIC:?}")));
        }

        let (n, line) = next("grid line")?;
        let f: Vec<&str> = line.split(' ').collect();
        if f.len() != 4 || f[0] != "grid" || f[3] != "odd-r" {
            return Err(bad(n, "expected `grid <width> <height> odd-r`"));
        }
        let grid = HexGrid::new(num(n, f[1])?, num(n, f[2])?).map_err(|e| bad(n, e))?;

        let (n, line) = next("dim line")?;
        let dim: usize = match line.strip_prefix("dim ") {
            Some(v) => num(n, v)?,
            None => return Err(bad(n, "expected `dim <n>`")),
        };
        if dim == 0 {
            return Err(bad(n, "dimension must be >= 1"));
        }

        let (n, line) = next("schedule line")?;
        let schedule = parse_schedule(n, line)?;

        let mut schema = Vec::with_capacity(dim);
        for i in 0..dim {
            let (n, line) = next("attr line")?;
            schema.push(parse_attr(n, line, i)?);
        }

        let mut weights = Vec::with_capacity(grid.len() * dim);
        for v in 0..grid.len() {
            let (n, line) = next("w line")?;
            let mut f = line.split(' ');
            if f.next() != Some("w") {
                return Err(bad(n, "expected `w <idx> <values...>`"));
            }
            let idx: usize = num(n, f.next().unwrap_or(""))?;
            if idx != v {
                return Err(bad(n, format!("expected neuron {v}, found {idx}")));
            }
            let start = weights.len();
            for tok in f {
                let w: f64 = num(n, tok)?;
                if !(0.0..=1.0).contains(&w) {
                    return Err(bad(n, format!("weight {w} outside [0, 1]")));
                }
                weights.push(w);
            }
            if weights.len() - start != dim {
                return Err(bad(
                    n,
                    format!("expected {dim} weights, found {}", weights.len() - start),
                ));
            }
        }
        if let Some((n, _)) = lines.next() {
            return Err(bad(n, "trailing content after the last neuron"));
        }

        Ok(SomModel {
            grid,
            dim,
            weights,
            schema,
            schedule: Some(schedule),
        })
    }
}

fn bad(line: usize, reason: impl ToString) -> Error {
    Error::Format {
        line,
        reason: reason.to_string(),
    }
}

fn num<T: FromStr>(line: usize, tok: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| bad(line, format!("cannot parse {tok:?} as a number")))
}

fn parse_schedule(n: usize, line: &str) -> Result<TrainingSchedule> {
    const KEYS: [&str; 6] = ["epochs", "alpha0", "alpha_end", "sigma0", "shuffle", "seed"];
    let mut f = line.split(' ');
    if f.next() != Some("schedule") {
        return Err(bad(n, "expected `schedule ...`"));
    }
    let vals: Vec<&str> = f.collect();
    if vals.len() != KEYS.len() {
        return Err(bad(n, format!("expected {} schedule fields", KEYS.len())));
    }
    let mut v = Vec::with_capacity(KEYS.len());
    for (key, field) in KEYS.iter().zip(&vals) {
        match field.split_once('=') {
            Some((k, val)) if k == *key => v.push(val),
            _ => return Err(bad(n, format!("expected `{key}=<value>`, found {field:?}"))),
        }
    }
    let shuffle = match v[4] {
        "0" => false,
        "1" => true,
        other => return Err(bad(n, format!("shuffle must be 0 or 1, found {other:?}"))),
    };
    let schedule = TrainingSchedule {
        epochs: num(n, v[0])?,
        alpha0: num(n, v[1])?,
        alpha_end: num(n, v[2])?,
        sigma0: num(n, v[3])?,
        shuffle,
        seed: num(n, v[5])?,
    };
    schedule.validate().map_err(|e| bad(n, e))?;
    Ok(schedule)
}

fn parse_attr(n: usize, line: &str, expected: usize) -> Result<AttributeSpec> {
    let rest = line
        .strip_prefix("attr ")
        .ok_or_else(|| bad(n, "expected `attr <index> <name> <min> <max> <0|1>`"))?;
    let (index, rest) = rest
        .split_once(' ')
        .ok_or_else(|| bad(n, "truncated attr line"))?;
    let index: usize = num(n, index)?;
    if index != expected {
        return Err(bad(n, format!("expected attribute {expected}, found {index}")));
    }
    let mut tail = rest.rsplitn(4, ' ');
    let (qc, max, min, name) = match (tail.next(), tail.next(), tail.next(), tail.next()) {
        (Some(qc), Some(max), Some(min), Some(name)) => (qc, max, min, name),
        _ => return Err(bad(n, "truncated attr line")),
    };
    let quasi_constant = match qc {
        "0" => false,
        "1" => true,
        other => return Err(bad(n, format!("quasi_constant must be 0 or 1, found {other:?}"))),
    };
    let spec = AttributeSpec::new(name, index, num(n, min)?, num(n, max)?).map_err(|e| bad(n, e))?;
    if spec.quasi_constant != quasi_constant {
        return Err(bad(n, "quasi_constant flag disagrees with the stored range"));
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{DataTable, SWIRL_EVAPORATOR_ATTRIBUTES};
    use crate::som::train;

    fn trained() -> SomModel {
        let names = ["Evaporation pressure", "Room  temperature", "c"];
        let values: Vec<f64> = (0..30)
            .flat_map(|i| [i as f64 * 0.37, 20.0 + (i % 7) as f64, 3.25])
            .collect();
        let t = DataTable::new(&names, values).unwrap().normalize().unwrap();
        let g = HexGrid::new(4, 3).unwrap();
        let s = TrainingSchedule {
            epochs: 5,
            ..TrainingSchedule::for_grid(&g)
        };
        train(&t, g, &s).unwrap()
    }

    #[test]
    fn roundtrip_is_byte_exact() {
        let m = trained();
        let text = m.to_text().unwrap();
        let back = SomModel::from_text(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_text().unwrap(), text);
        assert!(text.starts_with("som-atlas-model v1\ngrid 4 3 odd-r\ndim 3\nschedule epochs=5 "));
        assert!(text.contains("\nattr 1 Room  temperature 20 26 0\n"));
        assert!(text.contains("\nattr 2 c 3.25 3.25 1\n"));
        assert_eq!(text.lines().filter(|l| l.starts_with("w ")).count(), 12);
    }

    #[test]
    fn evaporator_names_survive() {
        let values: Vec<f64> = (0..54).map(|i| i as f64).collect();
        let t = DataTable::new(&SWIRL_EVAPORATOR_ATTRIBUTES, values)
            .unwrap()
            .normalize()
            .unwrap();
        let g = HexGrid::new(2, 2).unwrap();
        let s = TrainingSchedule {
            epochs: 1,
            ..TrainingSchedule::for_grid(&g)
        };
        let m = train(&t, g, &s).unwrap();
        let text = m.to_text().unwrap();
        assert!(text.contains("\ndim 27\n"));
        let back = SomModel::from_text(&text).unwrap();
        assert_eq!(back.schema(), m.schema());
    }

    #[test]
    fn untrained_model_cannot_be_written() {
        let g = HexGrid::new(2, 2).unwrap();
        assert!(SomModel::init_codebook(g, 2, 0).unwrap().to_text().is_err());
    }

    #[test]
    fn corrupt_files_name_the_line() {
        let text = trained().to_text().unwrap();
        let line_of = |err: Error| match err {
            Error::Format { line, .. } => line,
            other => panic!("unexpected {other:?}"),
        };
        let replace = |n: usize, with: &str| {
            let mut lines: Vec<&str> = text.lines().collect();
            lines[n - 1] = with;
            lines.join("\n") + "\n"
        };
        assert_eq!(line_of(SomModel::from_text("nope\n").unwrap_err()), 1);
        assert_eq!(line_of(SomModel::from_text(&replace(2, "grid 0 3 odd-r")).unwrap_err()), 2);
        assert_eq!(line_of(SomModel::from_text(&replace(2, "grid 4 3 even-q")).unwrap_err()), 2);
        assert_eq!(line_of(SomModel::from_text(&replace(4, "schedule epochs=5")).unwrap_err()), 4);
        assert_eq!(line_of(SomModel::from_text(&replace(6, "attr 2 x 1 0 0")).unwrap_err()), 6);
        assert_eq!(line_of(SomModel::from_text(&replace(7, "attr 2 c 1 1 0")).unwrap_err()), 7);
        assert_eq!(line_of(SomModel::from_text(&replace(8, "w 0 0.5 0.5")).unwrap_err()), 8);
        assert_eq!(line_of(SomModel::from_text(&replace(9, "w 1 0.5 1.5 0.5")).unwrap_err()), 9);
        assert_eq!(line_of(SomModel::from_text(&replace(10, "w 9 0.5 0.5 0.5")).unwrap_err()), 10);
        let truncated: String = text.lines().take(12).map(|l| format!("{l}\n")).collect();
        assert_eq!(line_of(SomModel::from_text(&truncated).unwrap_err()), 13);
        let extra = format!("{text}w 12 0 0 0\n");
        assert_eq!(line_of(SomModel::from_text(&extra).unwrap_err()), 20);
    }
}
