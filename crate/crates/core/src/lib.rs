//! Self-organizing maps for multidimensional sensor logs.
//!
//! The pipeline: [`ingest`] a CSV log and min-max normalize it, [`som`]
//! trains a Kohonen map on a [`hexgrid::HexGrid`], [`analysis`] classifies
//! rows, clusters the codebook and compares component planes, and
//! [`render`] draws planes and cluster maps as hexagonal heatmaps.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default); see [`Execution`].

pub mod analysis;
pub mod error;
mod exec;
pub mod hexgrid;
pub mod ingest;
pub mod render;
pub mod som;

pub use error::{Error, Result};
pub use exec::Execution;
pub use hexgrid::HexGrid;
pub use ingest::{AttributeSpec, DataTable, NormalizedTable};
pub use som::{SomModel, TrainingSchedule};
