use crate::error::{Error, Result};
use crate::hexgrid::HexGrid;

/// Training hyper-parameters. Everything that influences the trained
/// codebook is in here, so a schedule plus the data reproduces a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSchedule {
    /// Full passes over the data. The last one is purely competitive.
    pub epochs: usize,
    /// Learning rate at the first presentation.
    pub alpha0: f64,
    /// Learning rate at the last presentation.
    pub alpha_end: f64,
    /// Initial Gaussian neighborhood radius, in lattice hops.
    pub sigma0: f64,
    /// Visit rows in a seeded random order each epoch (file order otherwise).
    pub shuffle: bool,
    pub seed: u64,
}

pub const DEFAULT_EPOCHS: usize = 200;
pub const DEFAULT_ALPHA0: f64 = 0.5;
pub const DEFAULT_ALPHA_END: f64 = 0.01;
pub const DEFAULT_SEED: u64 = 20_250_101;

impl TrainingSchedule {
    /// Defaults for a grid: 200 epochs, alpha 0.5 -> 0.01 and a starting
    /// radius of half the longer grid side.
    pub fn for_grid(grid: &HexGrid) -> Self {
        TrainingSchedule {
            epochs: DEFAULT_EPOCHS,
            alpha0: DEFAULT_ALPHA0,
            alpha_end: DEFAULT_ALPHA_END,
            sigma0: grid.width().max(grid.height()) as f64 / 2.0,
            shuffle: true,
            seed: DEFAULT_SEED,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::out_of_range("epochs", self.epochs, ">= 1"));
        }
        if !(self.alpha0 > 0.0 && self.alpha0 <= 1.0) {
            return Err(Error::out_of_range("alpha0", self.alpha0, "(0, 1]"));
        }
        if !(self.alpha_end > 0.0 && self.alpha_end <= self.alpha0) {
            return Err(Error::out_of_range(
                "alpha_end",
                self.alpha_end,
                format!("(0, alpha0 = {}]", self.alpha0),
            ));
        }
        if !(self.sigma0.is_finite() && self.sigma0 > 0.0) {
            return Err(Error::out_of_range("sigma0", self.sigma0, "> 0"));
        }
        Ok(())
    }

    /// Bind the schedule to a dataset size.
    pub fn anneal(&self, n_rows: usize) -> Result<Annealing> {
        self.validate()?;
        if n_rows == 0 {
            return Err(Error::Empty("training table has no rows"));
        }
        Ok(Annealing {
            schedule: *self,
            n_rows,
        })
    }
}

/// A schedule bound to a dataset size: the iteration counter `s` advances
/// once per presented row, up to `epochs * n_rows` presentations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annealing {
    schedule: TrainingSchedule,
    n_rows: usize,
}

impl Annealing {
    pub fn schedule(&self) -> &TrainingSchedule {
        &self.schedule
    }

    /// Total number of presentations (the iteration limit).
    pub fn iterations(&self) -> usize {
        self.schedule.epochs * self.n_rows
    }

    /// First iteration of the final, purely competitive epoch.
    pub fn competitive_start(&self) -> usize {
        (self.schedule.epochs - 1) * self.n_rows
    }

    fn check(&self, s: usize) -> Result<()> {
        if s < self.iterations() {
            Ok(())
        } else {
            Err(Error::out_of_range(
                "iteration",
                s,
                format!("< {}", self.iterations()),
            ))
        }
    }

    /// Linear decay from `alpha0` at the first presentation to `alpha_end`
    /// at the last.
    pub fn learning_rate(&self, s: usize) -> Result<f64> {
        self.check(s)?;
        let limit = self.iterations();
        let TrainingSchedule {
            alpha0, alpha_end, ..
        } = self.schedule;
        if limit == 1 {
            return Ok(alpha0);
        }
        let f = s as f64 / (limit - 1) as f64;
        Ok(alpha0 * (1.0 - f) + alpha_end * f)
    }

    /// Neighborhood radius: linear from `sigma0` down to zero at the start of
    /// the final epoch, and zero throughout it.
    pub fn sigma(&self, s: usize) -> Result<f64> {
        self.check(s)?;
        let end = self.competitive_start();
        if s >= end {
            return Ok(0.0);
        }
        Ok(self.schedule.sigma0 * (1.0 - s as f64 / end as f64))
    }

    /// Gaussian neighborhood weight between neurons `u` and `v` at iteration `s`.
    pub fn neighborhood(&self, grid: &HexGrid, u: usize, v: usize, s: usize) -> Result<f64> {
        let d = grid.distance(u, v)?;
        Ok(gaussian(d, self.sigma(s)?))
    }
}

/// `exp(-d^2 / (2 sigma^2))`, with the `sigma = 0` limit (1 at `d = 0`, else 0).
pub fn gaussian(d: u32, sigma: f64) -> f64 {
    if d == 0 {
        1.0
    } else if sigma <= 0.0 {
        0.0
    } else {
        let d = d as f64;
        (-(d * d) / (2.0 * sigma * sigma)).exp()
    }
}
