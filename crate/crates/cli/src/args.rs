use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};

use crate::config::CommonArgs;

#[derive(Debug, Parser)]
#[command(
    name = "scour",
    version,
    about = "Fit and compare bridge-pier scour equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one or more power-law specs and write model files
    Fit(FitArgs),
    /// Fit the six-spec exclusion matrix and rank the specs
    Sensitivity(SensitivityArgs),
    /// Score published equations (and optional saved models) on the test split
    Baselines(BaselinesArgs),
    /// Predict scour for a single pier from a saved model
    Predict(PredictArgs),
    /// Shuffle a CSV into training and testing files
    Split(SplitArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Spec id (L1..L6, F1..F6) or `all`; repeat or comma-separate for several
    #[arg(long, value_delimiter = ',')]
    pub spec: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Subset of specs; defaults to every spec of the dataset's scale
    #[arg(long, value_delimiter = ',')]
    pub spec: Vec<String>,
    /// Also score the published equations on the same split
    #[arg(long)]
    pub compare: bool,
    /// Repeat the run with this many consecutive split seeds
    #[arg(long)]
    pub repeats: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BaselinesArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Saved model file to include in the comparison; may be repeated
    #[arg(long)]
    pub model: Vec<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("scale_input").required(true).args(["vc", "l"])))]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Pier width (m)
    #[arg(long = "D", allow_negative_numbers = true)]
    pub d: f64,
    /// Mean approach velocity (m/s)
    #[arg(long = "V", allow_negative_numbers = true)]
    pub v: f64,
    /// Flow depth (m)
    #[arg(long = "y", allow_negative_numbers = true)]
    pub y: f64,
    /// Median grain size (m)
    #[arg(long = "d50", allow_negative_numbers = true)]
    pub d50: f64,
    /// Sediment gradation
    #[arg(long = "sigma", allow_negative_numbers = true)]
    pub sigma: f64,
    /// Critical velocity (m/s), laboratory records
    #[arg(long = "Vc", allow_negative_numbers = true)]
    pub vc: Option<f64>,
    /// Pier length (m), field records
    #[arg(long = "L", allow_negative_numbers = true)]
    pub l: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 0.7)]
    pub ratio: f64,
    /// Falls back to $SCOUR_SEED, then 42
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_train: PathBuf,
    #[arg(long)]
    pub out_test: PathBuf,
    /// Directory for the config echo; defaults to the directory of --out-train
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Reject the whole file on the first bad row
    #[arg(long)]
    pub strict: bool,
}
