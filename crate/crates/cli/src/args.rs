use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use som_atlas::analysis::{KMeansParams, CORRELATION_THRESHOLD};
use som_atlas::render::ImageFormat;
use som_atlas::som::{DEFAULT_ALPHA0, DEFAULT_ALPHA_END, DEFAULT_EPOCHS, DEFAULT_SEED};

/// Train self-organizing maps on sensor logs and analyse the result.
#[derive(Debug, Parser)]
#[command(name = "som-atlas", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a map on a CSV log and write the model file.
    Train(TrainArgs),
    /// Render one heatmap per attribute from a model.
    Planes(PlanesArgs),
    /// Assign every row of a CSV log to its best matching neuron.
    Classify(ClassifyArgs),
    /// Cluster the codebook with k-means; optionally summarize a CSV log per cluster.
    Cluster(ClusterArgs),
    /// Pearson correlation between all component planes.
    Correlate(CorrelateArgs),
    /// Extract pulse features from pressure-curve CSVs.
    Features(FeaturesArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CsvArgs {
    /// Field delimiter (a single ASCII character).
    #[arg(long, default_value = ",")]
    pub delimiter: char,
    /// The file has no header row; columns are named column_1, column_2, ...
    #[arg(long)]
    pub no_header: bool,
    /// Drop malformed rows (reported on stderr) instead of failing.
    #[arg(long)]
    pub drop_bad_rows: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Model file to write.
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub width: usize,
    #[arg(long, default_value_t = 20)]
    pub height: usize,
    #[arg(long, default_value_t = DEFAULT_EPOCHS)]
    pub epochs: usize,
    #[arg(long, default_value_t = DEFAULT_ALPHA0)]
    pub alpha0: f64,
    #[arg(long, default_value_t = DEFAULT_ALPHA_END)]
    pub alpha_end: f64,
    /// Initial neighborhood radius in lattice hops [default: max(width, height) / 2].
    #[arg(long)]
    pub sigma0: Option<f64>,
    /// Present rows in file order instead of a seeded shuffle.
    #[arg(long)]
    pub no_shuffle: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Draw a fresh seed instead of using --seed (printed for reproduction).
    #[arg(long, conflicts_with = "seed")]
    pub random_seed: bool,
    /// Prepend a "Time" counter column advancing by this period (seconds) per row.
    #[arg(long)]
    pub time_counter: Option<f64>,
    #[command(flatten)]
    pub csv: CsvArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    #[arg(long, default_value = "svg", value_parser = parse_format)]
    pub format: ImageFormat,
    /// Hexagon radius in pixels.
    #[arg(long, default_value_t = 10.0)]
    pub radius: f64,
}

fn parse_format(s: &str) -> Result<ImageFormat, String> {
    s.parse().map_err(|e: som_atlas::Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct PlanesArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    #[arg(long, short)]
    pub output_dir: PathBuf,
    #[command(flatten)]
    pub render: RenderArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    #[arg(long, short)]
    pub input: PathBuf,
    /// Assignments CSV to write.
    #[arg(long, short)]
    pub output: PathBuf,
    #[command(flatten)]
    pub csv: CsvArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    /// Raw CSV log to assign and summarize per cluster.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    #[arg(long, short)]
    pub output_dir: PathBuf,
    #[arg(long, short)]
    pub k: usize,
    #[arg(long, default_value_t = KMeansParams::new(1).seed)]
    pub kmeans_seed: u64,
    /// Draw a fresh k-means seed (printed for reproduction).
    #[arg(long, conflicts_with = "kmeans_seed")]
    pub random_seed: bool,
    #[arg(long, default_value_t = KMeansParams::new(1).max_iters)]
    pub max_iters: usize,
    /// Independent k-means++ restarts; the lowest-inertia run wins.
    #[arg(long, default_value_t = KMeansParams::new(1).restarts)]
    pub restarts: usize,
    #[command(flatten)]
    pub render: RenderArgs,
    #[command(flatten)]
    pub csv: CsvArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CorrelateArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    /// Correlation matrix CSV to write.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Pairs with |r| at or above this are listed as correlated.
    #[arg(long, default_value_t = CORRELATION_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Args)]
pub struct FeaturesArgs {
    /// Two-column CSVs (time in s, pressure in bar) with a header row.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Start of the pulse window (s).
    #[arg(long)]
    pub t_open: f64,
    /// End of the pulse window (s).
    #[arg(long)]
    pub t_close: f64,
    /// Length of the regeneration window after t_close (s).
    #[arg(long)]
    pub regen_duration: f64,
    /// Feature table CSV to write, one row per input curve.
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, default_value = ",")]
    pub delimiter: char,
}
