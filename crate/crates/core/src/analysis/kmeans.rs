//! Lloyd's k-means with k-means++ seeding over flat row-major points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::som::squared_distance;

/// Result of one k-means fit.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub k: usize,
    pub dim: usize,
    /// `k x dim`, row-major.
    pub centroids: Vec<f64>,
    pub labels: Vec<usize>,
    /// Sum of squared point-centroid distances.
    pub inertia: f64,
    /// Lloyd iterations run by the winning restart.
    pub iterations: usize,
    /// Inertia after every iteration of the winning restart.
    pub inertia_trace: Vec<f64>,
}

impl KMeans {
    pub fn centroid(&self, j: usize) -> &[f64] {
        &self.centroids[j * self.dim..(j + 1) * self.dim]
    }
}

/// Cluster `points` (`n x dim`) into `k` groups.
///
/// Each of `restarts` runs seeds centroids with k-means++ and iterates
/// assign/update until labels stop changing or `max_iters` is hit; the run
/// with the lowest inertia wins (earliest on ties). A cluster that empties
/// is reseeded with the point farthest from its own centroid. Once Lloyd
/// settles, single points are moved between clusters while that lowers the
/// inertia, and Lloyd resumes from the improved partition.
pub fn kmeans(
    points: &[f64],
    dim: usize,
    k: usize,
    seed: u64,
    max_iters: usize,
    restarts: usize,
    exec: Execution,
) -> Result<KMeans> {
    if dim == 0 || !points.len().is_multiple_of(dim) {
        return Err(Error::Dimension {
            expected: dim,
            actual: points.len(),
        });
    }
    let n = points.len() / dim;
    if k == 0 || k > n {
        return Err(Error::out_of_range("k", k, format!("1..={n}")));
    }
    if max_iters == 0 {
        return Err(Error::out_of_range("max_iters", max_iters, ">= 1"));
    }
    if restarts == 0 {
        return Err(Error::out_of_range("restarts", restarts, ">= 1"));
    }
    let data = Points { values: points, dim };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeans> = None;
    for _ in 0..restarts {
        let init = plus_plus(&data, k, &mut rng);
        let fit = refine(&data, init, k, max_iters, exec);
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

struct Points<'a> {
    values: &'a [f64],
    dim: usize,
}

impl Points<'_> {
    fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    fn get(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }
}

fn plus_plus(data: &Points, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = data.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n)
        .map(|i| squared_distance(data.get(i), data.get(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave `acc` just short of `target`
            pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).expect("total > 0"))
        } else {
            (0..n).find(|i| !chosen.contains(i)).expect("k <= n")
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(squared_distance(data.get(i), data.get(next)));
        }
    }
    chosen.iter().flat_map(|&i| data.get(i).to_vec()).collect()
}

/// Nearest centroid per point (lowest index on ties) and its squared distance.
fn assign(data: &Points, centroids: &[f64], exec: Execution) -> Vec<(usize, f64)> {
    let dim = data.dim;
    exec.map_collect(data.len(), |i| {
        let p = data.get(i);
        centroids
            .chunks_exact(dim)
            .map(|c| squared_distance(p, c))
            .enumerate()
            .fold((0, f64::INFINITY), |best, (j, d)| if d < best.1 { (j, d) } else { best })
    })
}

fn update(data: &Points, labels: &mut [usize], k: usize) -> Vec<f64> {
    let dim = data.dim;
    let mut centroids = means(data, labels, k);
    loop {
        let counts = counts(labels, k);
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return centroids;
        };
        // farthest point from its own centroid, taken from a cluster that
        // can spare it
        let (far, _) = (0..data.len())
            .filter(|&i| counts[labels[i]] > 1)
            .map(|i| {
                let l = labels[i];
                (i, squared_distance(data.get(i), &centroids[l * dim..(l + 1) * dim]))
            })
            .fold((usize::MAX, f64::NEG_INFINITY), |b, (i, d)| if d > b.1 { (i, d) } else { b });
        labels[far] = empty;
        centroids = means(data, labels, k);
    }
}

fn counts(labels: &[usize], k: usize) -> Vec<usize> {
    let mut c = vec![0; k];
    for &l in labels {
        c[l] += 1;
    }
    c
}

fn means(data: &Points, labels: &[usize], k: usize) -> Vec<f64> {
    let dim = data.dim;
    let mut sums = vec![0.0; k * dim];
    let counts = counts(labels, k);
    for (i, &l) in labels.iter().enumerate() {
        for (s, v) in sums[l * dim..(l + 1) * dim].iter_mut().zip(data.get(i)) {
            *s += v;
        }
    }
    for (j, &c) in counts.iter().enumerate() {
        if c > 0 {
            for s in &mut sums[j * dim..(j + 1) * dim] {
                *s /= c as f64;
            }
        }
    }
    sums
}

/// Lloyd iterations alternated with single-point transfers.
fn refine(data: &Points, init: Vec<f64>, k: usize, max_iters: usize, exec: Execution) -> KMeans {
    let mut fit = lloyd(data, init, k, max_iters, exec);
    while fit.iterations < max_iters {
        let mut labels = fit.labels.clone();
        if !transfer(data, &mut labels, k) {
            break;
        }
        let next = lloyd(data, means(data, &labels, k), k, max_iters - fit.iterations, exec);
        if next.inertia >= fit.inertia {
            break;
        }
        let mut trace = std::mem::take(&mut fit.inertia_trace);
        trace.extend_from_slice(&next.inertia_trace);
        fit = KMeans {
            iterations: trace.len(),
            inertia_trace: trace,
            ..next
        };
    }
    fit
}

/// Move points to the cluster that lowers the total inertia most, accounting
/// for the shift of both means. Returns whether anything moved.
fn transfer(data: &Points, labels: &mut [usize], k: usize) -> bool {
    let dim = data.dim;
    let mut centroids = means(data, labels, k);
    let mut counts = counts(labels, k);
    let mut moved = false;
    for (i, label) in labels.iter_mut().enumerate() {
        let p = data.get(i);
        let a = *label;
        if counts[a] < 2 {
            continue;
        }
        let na = counts[a] as f64;
        let removal = squared_distance(p, &centroids[a * dim..(a + 1) * dim]) * na / (na - 1.0);
        let mut best = (a, removal);
        for b in (0..k).filter(|&b| b != a) {
            let nb = counts[b] as f64;
            let cost = squared_distance(p, &centroids[b * dim..(b + 1) * dim]) * nb / (nb + 1.0);
            if cost < best.1 {
                best = (b, cost);
            }
        }
        let b = best.0;
        if b == a || best.1 >= removal * (1.0 - 1e-12) {
            continue;
        }
        let nb = counts[b] as f64;
        for d in 0..dim {
            let ca = &mut centroids[a * dim + d];
            *ca = (*ca * na - p[d]) / (na - 1.0);
            let cb = &mut centroids[b * dim + d];
            *cb = (*cb * nb + p[d]) / (nb + 1.0);
        }
        counts[a] -= 1;
        counts[b] += 1;
        *label = b;
        moved = true;
    }
    moved
}

fn lloyd(data: &Points, init: Vec<f64>, k: usize, max_iters: usize, exec: Execution) -> KMeans {
    let mut labels: Vec<usize> = assign(data, &init, exec).into_iter().map(|(l, _)| l).collect();
    let mut trace = Vec::new();
    let mut centroids;
    let mut inertia;
    loop {
        centroids = update(data, &mut labels, k);
        let next = assign(data, &centroids, exec);
        inertia = next.iter().map(|(_, d)| d).sum::<f64>();
        trace.push(inertia);
        let next: Vec<usize> = next.into_iter().map(|(l, _)| l).collect();
        let converged = next == labels;
        labels = next;
        if converged || trace.len() >= max_iters {
            break;
        }
    }
    KMeans {
        k,
        dim: data.dim,
        centroids,
        labels,
        inertia,
        iterations: trace.len(),
        inertia_trace: trace,
    }
}
