//! K-means over the codebook, per-cluster statistics in raw units, and the
//! two prediction directions built on them: settings -> expected cluster
//! statistics, and cluster -> candidate settings.

use super::kmeans::kmeans;
use super::{check_columns, normalize_row, BmuAssignment};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ingest::{denormalize, AttributeSpec, DataTable};
use crate::som::{AttributeMask, SomModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Independent k-means++ restarts; the lowest-inertia run is kept.
    pub restarts: usize,
}

pub const DEFAULT_KMEANS_SEED: u64 = 7;
pub const DEFAULT_MAX_ITERS: usize = 300;
pub const DEFAULT_RESTARTS: usize = 20;

impl KMeansParams {
    pub fn new(k: usize) -> Self {
        KMeansParams {
            k,
            seed: DEFAULT_KMEANS_SEED,
            max_iters: DEFAULT_MAX_ITERS,
            restarts: DEFAULT_RESTARTS,
        }
    }
}

/// Count, mean and sample standard deviation of one attribute within one
/// cluster, in raw units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttributeStats {
    pub count: usize,
    /// `None` when the cluster received no rows.
    pub mean: Option<f64>,
    /// `None` when the cluster received no rows; 0 for a single row.
    pub std: Option<f64>,
    pub single_sample: bool,
}

impl AttributeStats {
    fn from_values(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return AttributeStats {
                count,
                mean: None,
                std: None,
                single_sample: false,
            };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let std = if count == 1 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        };
        AttributeStats {
            count,
            mean: Some(mean),
            std: Some(std),
            single_sample: count == 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStats {
    pub cluster: usize,
    pub rows: usize,
    /// One entry per schema attribute.
    pub attributes: Vec<AttributeStats>,
}

/// A k-means partition of the codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    pub dim: usize,
    /// `k x dim`, normalized units.
    pub centroids: Vec<f64>,
    pub neuron_labels: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
    pub inertia_trace: Vec<f64>,
    /// Filled in by [`cluster_stats`].
    pub stats: Option<Vec<ClusterStats>>,
    names: Vec<String>,
}

impl ClusterModel {
    pub fn centroid(&self, j: usize) -> &[f64] {
        &self.centroids[j * self.dim..(j + 1) * self.dim]
    }

    /// Neurons per cluster.
    pub fn sizes(&self) -> Vec<usize> {
        let mut c = vec![0; self.k];
        for &l in &self.neuron_labels {
            c[l] += 1;
        }
        c
    }

    /// `neuron,cluster` for every neuron.
    pub fn labels_to_csv(&self) -> String {
        let mut out = String::from("neuron,cluster\n");
        for (v, l) in self.neuron_labels.iter().enumerate() {
            out.push_str(&format!("{v},{l}\n"));
        }
        out
    }

    /// `cluster,attribute,count,mean,std`; absent statistics are empty cells.
    pub fn stats_to_csv(&self) -> Option<String> {
        let stats = self.stats.as_ref()?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["cluster", "attribute", "count", "mean", "std"])
            .expect("in-memory write");
        for c in stats {
            for (name, a) in self.names.iter().zip(&c.attributes) {
                let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                w.write_record([
                    c.cluster.to_string(),
                    name.clone(),
                    a.count.to_string(),
                    fmt(a.mean),
                    fmt(a.std),
                ])
                .expect("in-memory write");
            }
        }
        Some(String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 names"))
    }
}

pub fn kmeans_codebook(model: &SomModel, params: &KMeansParams) -> Result<ClusterModel> {
    kmeans_codebook_with(model, params, Execution::default())
}

/// Partition the neurons' weight vectors into `k` clusters.
pub fn kmeans_codebook_with(
    model: &SomModel,
    params: &KMeansParams,
    exec: Execution,
) -> Result<ClusterModel> {
    let n = model.n_neurons();
    if params.k == 0 || params.k > n {
        return Err(Error::out_of_range(
            "cluster count k",
            params.k,
            format!("1..={n} (neuron count)"),
        ));
    }
    let fit = kmeans(
        model.weights(),
        model.dim(),
        params.k,
        params.seed,
        params.max_iters,
        params.restarts,
        exec,
    )?;
    Ok(ClusterModel {
        k: fit.k,
        dim: fit.dim,
        centroids: fit.centroids,
        neuron_labels: fit.labels,
        inertia: fit.inertia,
        iterations: fit.iterations,
        inertia_trace: fit.inertia_trace,
        stats: None,
        names: model.schema().iter().map(|a| a.name.clone()).collect(),
    })
}

/// Label every data row with its neuron's cluster and summarize each
/// cluster's rows per attribute, in raw units.
pub fn cluster_stats(
    clusters: &ClusterModel,
    assignments: &[BmuAssignment],
    table: &DataTable,
    model: &SomModel,
) -> Result<ClusterModel> {
    check_columns(model, table)?;
    if assignments.len() != table.n_rows() {
        return Err(Error::Dimension {
            expected: table.n_rows(),
            actual: assignments.len(),
        });
    }
    if clusters.neuron_labels.len() != model.n_neurons() {
        return Err(Error::Dimension {
            expected: model.n_neurons(),
            actual: clusters.neuron_labels.len(),
        });
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); clusters.k];
    for a in assignments {
        let label = *clusters.neuron_labels.get(a.neuron).ok_or_else(|| {
            Error::out_of_range("neuron index", a.neuron, format!("< {}", model.n_neurons()))
        })?;
        if a.row >= table.n_rows() {
            return Err(Error::out_of_range("row index", a.row, format!("< {}", table.n_rows())));
        }
        members[label].push(a.row);
    }
    let stats = members
        .iter()
        .enumerate()
        .map(|(cluster, rows)| ClusterStats {
            cluster,
            rows: rows.len(),
            attributes: (0..table.dim())
                .map(|j| {
                    let vals: Vec<f64> = rows.iter().map(|&r| table.row(r)[j]).collect();
                    AttributeStats::from_values(&vals)
                })
                .collect(),
        })
        .collect();
    let mut out = clusters.clone();
    out.stats = Some(stats);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardPrediction {
    pub neuron: usize,
    pub distance: f64,
    pub cluster: usize,
    /// Some provided value was outside the training range.
    pub clamped: bool,
    /// Statistics of the target attribute within the predicted cluster.
    pub target: AttributeStats,
}

fn attribute_index(schema: &[AttributeSpec], name: &str) -> Result<usize> {
    schema
        .iter()
        .position(|a| a.name == name)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown attribute {name:?}")))
}

/// Predict the cluster, and the target attribute's statistics within it,
/// from a partial set of raw attribute values. Only the given attributes
/// enter the BMU distance.
pub fn predict_forward(
    model: &SomModel,
    clusters: &ClusterModel,
    partial: &[(&str, f64)],
    target: &str,
) -> Result<ForwardPrediction> {
    let schema = model.schema();
    if schema.len() != model.dim() {
        return Err(Error::InvalidArgument("model carries no attribute schema".into()));
    }
    if clusters.neuron_labels.len() != model.n_neurons() {
        return Err(Error::Dimension {
            expected: model.n_neurons(),
            actual: clusters.neuron_labels.len(),
        });
    }
    let target_idx = attribute_index(schema, target)?;
    let stats = clusters
        .stats
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("cluster statistics have not been computed".into()))?;

    let mut x = vec![0.0; model.dim()];
    let mut given = Vec::with_capacity(partial.len());
    let mut clamped = false;
    for &(name, value) in partial {
        let i = attribute_index(schema, name)?;
        let (t, c) = normalize_row(&schema[i..=i], &[value]);
        x[i] = t[0];
        clamped |= c;
        given.push(i);
    }
    let mask = AttributeMask::new(given, model.dim())?;
    let bmu = model.find_bmu(&x, Some(&mask))?;
    let cluster = clusters.neuron_labels[bmu.index];
    Ok(ForwardPrediction {
        neuron: bmu.index,
        distance: bmu.distance,
        cluster,
        clamped,
        target: stats[cluster].attributes[target_idx],
    })
}

/// Candidate operating range of one attribute over a cluster's neurons.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeRange {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

/// For a target cluster, the raw-unit range of every attribute over the
/// denormalized weights of the neurons in that cluster.
pub fn predict_reverse(
    model: &SomModel,
    clusters: &ClusterModel,
    target_cluster: usize,
) -> Result<Vec<AttributeRange>> {
    if target_cluster >= clusters.k {
        return Err(Error::out_of_range(
            "cluster",
            target_cluster,
            format!("< {}", clusters.k),
        ));
    }
    let schema = model.schema();
    if schema.len() != model.dim() {
        return Err(Error::InvalidArgument("model carries no attribute schema".into()));
    }
    let neurons: Vec<usize> = (0..model.n_neurons())
        .filter(|&v| clusters.neuron_labels.get(v) == Some(&target_cluster))
        .collect();
    if neurons.is_empty() {
        return Err(Error::Undefined(format!("cluster {target_cluster} has no neurons")));
    }
    schema
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let raw = neurons
                .iter()
                .map(|&v| raw_weight(model.neuron(v)[j], a))
                .collect::<Result<Vec<f64>>>()?;
            Ok(AttributeRange {
                name: a.name.clone(),
                min: raw.iter().cloned().fold(f64::INFINITY, f64::min),
                max: raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                mean: raw.iter().sum::<f64>() / raw.len() as f64,
            })
        })
        .collect()
}

/// Quasi-constant attributes carry no information in the codebook; they
/// report the centre of their recorded range.
fn raw_weight(w: f64, a: &AttributeSpec) -> Result<f64> {
    if a.quasi_constant {
        Ok(0.5 * (a.raw_min + a.raw_max))
    } else {
        denormalize(w, a)
    }
}
