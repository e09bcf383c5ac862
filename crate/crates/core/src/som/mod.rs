//! Kohonen self-organizing map on a hexagonal lattice.
//!
//! Every presentation of a data row `x` moves each neuron `v` toward it,
//!
//! ```text
//! W_v <- W_v + theta(u, v, s) * alpha(s) * (x - W_v)
//! ```
//!
//! where `u` is the best matching unit (Euclidean nearest neuron), `alpha`
//! decays linearly and `theta` is a Gaussian over hex-grid distance whose
//! radius shrinks to zero for the final, purely competitive epoch.

mod format;
mod schedule;

pub use schedule::{
    gaussian, Annealing, TrainingSchedule, DEFAULT_ALPHA0, DEFAULT_ALPHA_END, DEFAULT_EPOCHS,
    DEFAULT_SEED,
};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hexgrid::HexGrid;
use crate::ingest::{AttributeSpec, NormalizedTable};

/// Codebooks with fewer scalar weights than this are scanned sequentially
/// even under [`Execution::Parallel`]; thread hand-off would dominate.
const PARALLEL_STEP_WORK: usize = 1 << 15;

/// A best matching unit and its Euclidean distance to the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bmu {
    pub index: usize,
    pub distance: f64,
}

/// A non-empty, strictly ascending subset of attribute indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeMask(Vec<usize>);

impl AttributeMask {
    pub fn new(mut indices: Vec<usize>, dim: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidArgument("attribute mask is empty".into()));
        }
        indices.sort_unstable();
        indices.dedup();
        if let Some(&bad) = indices.iter().find(|&&i| i >= dim) {
            return Err(Error::out_of_range("attribute index", bad, format!("< {dim}")));
        }
        Ok(AttributeMask(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }
}

/// Trained (or freshly initialized) map: a `neurons x dim` codebook in
/// normalized units plus what is needed to interpret and reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct SomModel {
    grid: HexGrid,
    dim: usize,
    weights: Vec<f64>,
    schema: Vec<AttributeSpec>,
    schedule: Option<TrainingSchedule>,
}

impl SomModel {
    /// Codebook with every weight drawn uniformly from `[0, 1)` by ChaCha8
    /// seeded with `seed`.
    pub fn init_codebook(grid: HexGrid, dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::out_of_range("dimension", dim, ">= 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..grid.len() * dim).map(|_| rng.random::<f64>()).collect();
        Ok(SomModel {
            grid,
            dim,
            weights,
            schema: Vec::new(),
            schedule: None,
        })
    }

    /// Assemble a model from explicit weights (row-major, one row per neuron).
    pub fn from_weights(grid: HexGrid, dim: usize, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::out_of_range("dimension", dim, ">= 1"));
        }
        if weights.len() != grid.len() * dim {
            return Err(Error::Dimension {
                expected: grid.len() * dim,
                actual: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::out_of_range("weight", w, "[0, 1]"));
        }
        Ok(SomModel {
            grid,
            dim,
            weights,
            schema: Vec::new(),
            schedule: None,
        })
    }

    /// Attach the attribute schema used to normalize the training data.
    pub fn with_schema(mut self, schema: Vec<AttributeSpec>) -> Result<Self> {
        if schema.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                actual: schema.len(),
            });
        }
        self.schema = schema;
        Ok(self)
    }

    pub fn with_schedule(mut self, schedule: TrainingSchedule) -> Self {
        self.schedule = Some(schedule);
        self
    }

    pub fn grid(&self) -> &HexGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_neurons(&self) -> usize {
        self.grid.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Mutable access to the raw codebook. Callers must keep every weight in
    /// `[0, 1]`.
    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn neuron(&self, v: usize) -> &[f64] {
        &self.weights[v * self.dim..(v + 1) * self.dim]
    }

    pub fn schema(&self) -> &[AttributeSpec] {
        &self.schema
    }

    pub fn schedule(&self) -> Option<&TrainingSchedule> {
        self.schedule.as_ref()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dim {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: self.dim,
                actual: x.len(),
            })
        }
    }

    pub fn find_bmu(&self, x: &[f64], mask: Option<&AttributeMask>) -> Result<Bmu> {
        self.find_bmu_with(x, mask, Execution::default())
    }

    /// Nearest neuron to `x` by Euclidean distance over the masked attributes
    /// (all of them without a mask). Ties go to the lowest index.
    pub fn find_bmu_with(
        &self,
        x: &[f64],
        mask: Option<&AttributeMask>,
        exec: Execution,
    ) -> Result<Bmu> {
        self.check_dim(x)?;
        if let Some(m) = mask {
            if let Some(&bad) = m.indices().iter().find(|&&i| i >= self.dim) {
                return Err(Error::out_of_range("attribute index", bad, format!("< {}", self.dim)));
            }
        }
        Ok(self.bmu_unchecked(x, mask, exec))
    }

    fn bmu_unchecked(&self, x: &[f64], mask: Option<&AttributeMask>, exec: Execution) -> Bmu {
        let sq = |v: usize| -> f64 {
            let w = self.neuron(v);
            match mask {
                None => squared_distance(w, x),
                Some(m) => m
                    .indices()
                    .iter()
                    .map(|&i| {
                        let d = x[i] - w[i];
                        d * d
                    })
                    .sum(),
            }
        };
        let n = self.n_neurons();
        let exec = exec.for_work(self.weights.len(), PARALLEL_STEP_WORK);
        let (index, best) = if exec.is_parallel() {
            argmin(exec.map_collect(n, sq).into_iter())
        } else {
            argmin((0..n).map(sq))
        };
        Bmu {
            index,
            distance: best.sqrt(),
        }
    }

    /// One presentation of `x` at iteration `s`. Returns the BMU.
    pub fn update_step(&mut self, x: &[f64], s: usize, annealing: &Annealing) -> Result<Bmu> {
        self.update_step_with(x, s, annealing, Execution::default())
    }

    pub fn update_step_with(
        &mut self,
        x: &[f64],
        s: usize,
        annealing: &Annealing,
        exec: Execution,
    ) -> Result<Bmu> {
        self.check_dim(x)?;
        let alpha = annealing.learning_rate(s)?;
        let sigma = annealing.sigma(s)?;
        let bmu = self.bmu_unchecked(x, None, exec);
        let coefficients: Vec<f64> = (0..=self.grid.diameter())
            .map(|d| gaussian(d, sigma) * alpha)
            .collect();
        self.apply_update(x, bmu.index, &coefficients, exec);
        Ok(bmu)
    }

    /// Move every neuron toward `x` with coefficient `coefficients[d]`, where
    /// `d` is its grid distance to `bmu`.
    fn apply_update(&mut self, x: &[f64], bmu: usize, coefficients: &[f64], exec: Execution) {
        let grid = self.grid;
        let origin = grid.axial(bmu).expect("bmu index in range");
        let exec = exec.for_work(self.weights.len(), PARALLEL_STEP_WORK);
        exec.for_each_chunk_mut(&mut self.weights, self.dim, |v, w| {
            let d = origin.distance(grid.axial(v).expect("neuron index in range"));
            let c = coefficients[d as usize];
            if c != 0.0 {
                move_toward(w, x, c);
            }
        });
    }

    pub fn quantization_error(&self, table: &NormalizedTable) -> Result<f64> {
        self.quantization_error_with(table, Execution::default())
    }

    /// Mean BMU distance over the rows of `table`.
    pub fn quantization_error_with(&self, table: &NormalizedTable, exec: Execution) -> Result<f64> {
        if table.is_empty() {
            return Err(Error::Empty("quantization error of an empty table"));
        }
        if table.dim() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                actual: table.dim(),
            });
        }
        let distances = exec.map_collect(table.n_rows(), |i| {
            self.bmu_unchecked(table.row(i), None, Execution::Sequential)
                .distance
        });
        Ok(distances.iter().sum::<f64>() / table.n_rows() as f64)
    }

    /// Continue training from the current codebook.
    pub fn train_from(
        &mut self,
        table: &NormalizedTable,
        schedule: &TrainingSchedule,
        exec: Execution,
    ) -> Result<()> {
        if table.dim() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                actual: table.dim(),
            });
        }
        let annealing = schedule.anneal(table.n_rows())?;
        let mut order: Vec<usize> = (0..table.n_rows()).collect();
        let mut rng = shuffle_rng(schedule.seed);
        let mut coefficients = vec![0.0; self.grid.diameter() as usize + 1];
        let mut s = 0;
        for _ in 0..schedule.epochs {
            if schedule.shuffle {
                order.shuffle(&mut rng);
            }
            for &i in &order {
                let x = table.row(i);
                let alpha = annealing.learning_rate(s)?;
                let sigma = annealing.sigma(s)?;
                for (d, c) in coefficients.iter_mut().enumerate() {
                    *c = gaussian(d as u32, sigma) * alpha;
                }
                let bmu = self.bmu_unchecked(x, None, exec);
                self.apply_update(x, bmu.index, &coefficients, exec);
                s += 1;
            }
        }
        self.schema = table.schema().to_vec();
        self.schedule = Some(*schedule);
        Ok(())
    }
}

/// Initialize a codebook from the schedule's seed and train it on `table`.
pub fn train(
    table: &NormalizedTable,
    grid: HexGrid,
    schedule: &TrainingSchedule,
) -> Result<SomModel> {
    train_with(table, grid, schedule, Execution::default())
}

pub fn train_with(
    table: &NormalizedTable,
    grid: HexGrid,
    schedule: &TrainingSchedule,
    exec: Execution,
) -> Result<SomModel> {
    if table.is_empty() {
        return Err(Error::Empty("training table has no rows"));
    }
    schedule.validate()?;
    let mut model = SomModel::init_codebook(grid, table.dim(), schedule.seed)?;
    model.train_from(table, schedule, exec)?;
    Ok(model)
}

/// Presentation order uses its own ChaCha stream so it does not depend on
/// how the codebook was initialized.
fn shuffle_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| {
            let d = q - p;
            d * d
        })
        .sum()
}

/// Index and value of the first minimum.
pub(crate) fn argmin(values: impl Iterator<Item = f64>) -> (usize, f64) {
    values
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, v)| {
            if v < bv {
                (i, v)
            } else {
                (bi, bv)
            }
        })
}

/// `w <- w + c * (x - w)` evaluated as the convex combination
/// `(1 - c) w + c x`, which is exact at `c = 0` and `c = 1`. Rounding can
/// overshoot by an ulp, so the result is clamped to the segment `[w, x]`.
///
/// `c` is the combined coefficient `theta * alpha` and should lie in `[0, 1]`.
pub fn move_toward(w: &mut [f64], x: &[f64], c: f64) {
    let keep = 1.0 - c;
    for (wi, &xi) in w.iter_mut().zip(x) {
        let next = keep * *wi + c * xi;
        *wi = next.clamp(wi.min(xi), wi.max(xi));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::{prop, prop_assert, prop_assert_eq, proptest};

    fn table(names: &[&str], rows: &[&[f64]]) -> NormalizedTable {
        let specs = names
            .iter()
            .enumerate()
            .map(|(i, n)| AttributeSpec::new(*n, i, 0.0, 1.0).unwrap())
            .collect();
        NormalizedTable::from_normalized(specs, rows.concat()).unwrap()
    }

    fn schedule(epochs: usize, alpha: f64) -> TrainingSchedule {
        TrainingSchedule {
            epochs,
            alpha0: alpha,
            alpha_end: alpha,
            sigma0: 1.0,
            shuffle: true,
            seed: 7,
        }
    }

    #[test]
    fn init_is_deterministic_and_in_range() {
        let g = HexGrid::new(4, 3).unwrap();
        let a = SomModel::init_codebook(g, 5, 1).unwrap();
        let b = SomModel::init_codebook(g, 5, 1).unwrap();
        let c = SomModel::init_codebook(g, 5, 2).unwrap();
        assert_eq!(a.weights(), b.weights());
        assert_ne!(a.weights(), c.weights());
        assert_eq!(a.weights().len(), 12 * 5);
        assert!(a.weights().iter().all(|w| (0.0..=1.0).contains(w)));
        assert!(SomModel::init_codebook(g, 0, 1).is_err());
    }

    #[test]
    fn init_codebook_frozen_values() {
        // Pins the generator: any change to the RNG or sampling breaks saved seeds.
        let g = HexGrid::new(1, 1).unwrap();
        let m = SomModel::init_codebook(g, 3, 1).unwrap();
        let again = SomModel::init_codebook(g, 3, 1).unwrap();
        assert_eq!(m.weights(), again.weights());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let expected: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
        assert_eq!(m.weights(), expected.as_slice());
    }

    #[test]
    fn bmu_single_neuron() {
        let g = HexGrid::new(1, 1).unwrap();
        let m = SomModel::from_weights(g, 2, vec![0.3, 0.4]).unwrap();
        let b = m.find_bmu(&[0.0, 0.0], None).unwrap();
        assert_eq!(b.index, 0);
        assert_relative_eq!(b.distance, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn bmu_picks_nearer_neuron() {
        let g = HexGrid::new(2, 1).unwrap();
        let m = SomModel::from_weights(g, 2, vec![0.3, 0.4, 0.1, 0.0]).unwrap();
        let b = m.find_bmu(&[0.0, 0.0], None).unwrap();
        assert_eq!(b.index, 1);
        assert_relative_eq!(b.distance, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn bmu_exact_match_and_ties() {
        let g = HexGrid::new(3, 1).unwrap();
        let m = SomModel::from_weights(g, 2, vec![0.9, 0.9, 0.2, 0.7, 0.2, 0.7]).unwrap();
        let b = m.find_bmu(&[0.2, 0.7], None).unwrap();
        assert_eq!((b.index, b.distance), (1, 0.0));
    }

    #[test]
    fn bmu_errors() {
        let g = HexGrid::new(2, 1).unwrap();
        let m = SomModel::init_codebook(g, 3, 0).unwrap();
        assert!(matches!(m.find_bmu(&[0.0; 2], None), Err(Error::Dimension { .. })));
        assert!(AttributeMask::new(vec![], 3).is_err());
        assert!(AttributeMask::new(vec![3], 3).is_err());
        let foreign = AttributeMask::new(vec![4], 5).unwrap();
        assert!(m.find_bmu(&[0.0; 3], Some(&foreign)).is_err());
    }

    #[test]
    fn masked_bmu_ignores_other_attributes() {
        let g = HexGrid::new(2, 1).unwrap();
        let m = SomModel::from_weights(g, 2, vec![0.1, 0.9, 0.5, 0.0]).unwrap();
        let mask = AttributeMask::new(vec![0], 2).unwrap();
        assert_eq!(m.find_bmu(&[0.0, 0.0], None).unwrap().index, 1);
        let b = m.find_bmu(&[0.0, 0.0], Some(&mask)).unwrap();
        assert_eq!(b.index, 0);
        assert_relative_eq!(b.distance, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn update_unit_coefficient_copies_input() {
        let g = HexGrid::new(1, 1).unwrap();
        let mut m = SomModel::from_weights(g, 3, vec![0.1, 0.7, 0.3]).unwrap();
        let a = schedule(1, 1.0).anneal(1).unwrap();
        let x = [0.9, 0.2, 0.123456789];
        m.update_step(&x, 0, &a).unwrap();
        assert_eq!(m.weights(), &x);
    }

    #[test]
    fn update_midpoint() {
        let g = HexGrid::new(1, 1).unwrap();
        let mut m = SomModel::from_weights(g, 2, vec![0.0, 0.0]).unwrap();
        let a = schedule(1, 0.5).anneal(1).unwrap();
        m.update_step(&[1.0, 1.0], 0, &a).unwrap();
        assert_eq!(m.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn zero_coefficient_leaves_weights() {
        let g = HexGrid::new(3, 3).unwrap();
        let mut m = SomModel::init_codebook(g, 2, 3).unwrap();
        let before = m.weights().to_vec();
        m.apply_update(&[0.5, 0.5], 4, &[0.0; 7], Execution::Sequential);
        assert_eq!(m.weights(), before.as_slice());
    }

    #[test]
    fn bmu_moves_most() {
        let g = HexGrid::new(5, 5).unwrap();
        let mut m = SomModel::init_codebook(g, 3, 11).unwrap();
        let mut s = schedule(2, 0.3);
        s.sigma0 = 2.0;
        let a = s.anneal(1).unwrap();
        let before = m.clone();
        let x = [0.2, 0.8, 0.5];
        let bmu = m.update_step(&x, 0, &a).unwrap();
        let moved: Vec<f64> = (0..g.len())
            .map(|v| {
                let d0 = squared_distance(before.neuron(v), &x).sqrt();
                let d1 = squared_distance(m.neuron(v), &x).sqrt();
                (d0 - d1) / d0
            })
            .collect();
        let best = moved.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(moved[bmu.index], best);
    }

    #[test]
    fn train_single_neuron_tracks_last_row() {
        let t = table(&["a", "b"], &[&[0.1, 0.2], &[0.8, 0.6], &[0.4, 0.9]]);
        let g = HexGrid::new(1, 1).unwrap();
        let mut s = schedule(1, 1.0);
        s.shuffle = false;
        let mut m = SomModel::init_codebook(g, 2, 5).unwrap();
        let a = s.anneal(3).unwrap();
        m.update_step(t.row(0), 0, &a).unwrap();
        assert_eq!(m.neuron(0), t.row(0));

        let m = train(&t, g, &s).unwrap();
        assert_eq!(m.neuron(0), t.row(2));
        assert_eq!(m.schema(), t.schema());
        assert_eq!(m.schedule(), Some(&s));
    }

    #[test]
    fn train_two_points_reduces_error() {
        let t = table(&["a", "b"], &[&[0.0, 0.0], &[1.0, 1.0]]);
        let g = HexGrid::new(2, 1).unwrap();
        let s = TrainingSchedule {
            seed: 99,
            ..TrainingSchedule::for_grid(&g)
        };
        let init = SomModel::init_codebook(g, 2, s.seed).unwrap();
        let trained = train(&t, g, &s).unwrap();
        let before = init.quantization_error(&t).unwrap();
        let after = trained.quantization_error(&t).unwrap();
        assert!(after <= before, "{after} > {before}");
        assert!(after < 0.05);
    }

    #[test]
    fn train_rejects_bad_input() {
        let g = HexGrid::new(2, 2).unwrap();
        let specs = vec![AttributeSpec::new("a", 0, 0.0, 1.0).unwrap()];
        let empty = NormalizedTable::from_normalized(specs, vec![]).unwrap();
        assert!(matches!(train(&empty, g, &schedule(1, 0.5)), Err(Error::Empty(_))));
        let t = table(&["a"], &[&[0.5]]);
        let mut m = SomModel::init_codebook(g, 2, 0).unwrap();
        assert!(m.train_from(&t, &schedule(1, 0.5), Execution::Sequential).is_err());
    }

    #[test]
    fn quantization_error_examples() {
        let t = table(&["a", "b"], &[&[0.0, 0.0], &[1.0, 1.0]]);
        let g1 = HexGrid::new(1, 1).unwrap();
        let m = SomModel::from_weights(g1, 2, vec![0.5, 0.5]).unwrap();
        assert_relative_eq!(m.quantization_error(&t).unwrap(), 0.5f64.sqrt(), epsilon = 1e-15);
        let g2 = HexGrid::new(2, 1).unwrap();
        let exact = SomModel::from_weights(g2, 2, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(exact.quantization_error(&t).unwrap(), 0.0);
    }

    #[test]
    fn training_is_deterministic_across_execution_modes() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i as f64 / 39.0), ((i * 7) % 40) as f64 / 39.0, 0.5])
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let t = table(&["a", "b", "c"], &refs);
        // large enough codebook to take the parallel path
        let g = HexGrid::new(110, 110).unwrap();
        let s = TrainingSchedule {
            epochs: 2,
            ..TrainingSchedule::for_grid(&g)
        };
        let seq = train_with(&t, g, &s, Execution::Sequential).unwrap();
        let par = train_with(&t, g, &s, Execution::Parallel).unwrap();
        assert_eq!(seq.weights(), par.weights());
        let again = train_with(&t, g, &s, Execution::Parallel).unwrap();
        assert_eq!(par.weights(), again.weights());
    }

    proptest! {
        #[test]
        fn box_closure(w in prop::collection::vec(0.0f64..=1.0, 4), x in prop::collection::vec(0.0f64..=1.0, 4), c in 0.0f64..=1.0) {
            let mut w = w;
            move_toward(&mut w, &x, c);
            prop_assert!(w.iter().all(|v| (0.0..=1.0).contains(v)));
        }

        #[test]
        fn bmu_scale_invariant(w in prop::collection::vec(0.0f64..=1.0, 12 * 3), x in prop::collection::vec(0.0f64..=1.0, 3), c in 0.1f64..10.0) {
            let g = HexGrid::new(4, 3).unwrap();
            let m = SomModel { grid: g, dim: 3, weights: w.clone(), schema: vec![], schedule: None };
            let scaled = SomModel { weights: w.iter().map(|v| v * c).collect(), ..m.clone() };
            let xs: Vec<f64> = x.iter().map(|v| v * c).collect();
            prop_assert_eq!(m.find_bmu(&x, None).unwrap().index, scaled.find_bmu(&xs, None).unwrap().index);
        }

        #[test]
        fn parallel_bmu_matches_sequential(seed in 0u64..1000) {
            let g = HexGrid::new(100, 100).unwrap();
            let m = SomModel::init_codebook(g, 4, seed).unwrap();
            let x = [0.25, 0.5, 0.75, 0.1];
            prop_assert_eq!(
                m.find_bmu_with(&x, None, Execution::Sequential).unwrap(),
                m.find_bmu_with(&x, None, Execution::Parallel).unwrap()
            );
        }
    }
}
