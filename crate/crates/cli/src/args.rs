//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "cardiosep", version, about = "Heart and lung sound separation from multichannel recordings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Separate mixtures into heart and lung estimates.
    Separate(SeparateArgs),
    /// Generate synthetic mixtures with ground truth.
    Synth(SynthArgs),
    /// Print the feature block of each input signal.
    Features(FeaturesArgs),
    /// Score estimates against reference signals.
    Evaluate(EvaluateArgs),
    /// Run a hyperparameter sweep on synthetic cases.
    Sweep(SweepArgs),
}

/// Separation settings shared by `separate` and `sweep`. Unset flags keep
/// the value from `--config` or the built-in default.
#[derive(Debug, Clone, Default, Args)]
pub struct SepFlags {
    /// JSON configuration, or a manifest.json from an earlier run.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// standard | alpha | plnmf | lingonmf
    #[arg(long)]
    pub method: Option<String>,
    /// α for both passes, or `HEART,LUNG`.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    /// Layer count for both passes, or `HEART,LUNG`.
    #[arg(long)]
    pub layers: Option<String>,
    /// Affine scale for both passes, or `HEART,LUNG`.
    #[arg(long)]
    pub lambda1: Option<String>,
    /// `auto` or an offset, for both passes or as `HEART,LUNG`.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda2: Option<String>,
    #[arg(long = "lambda-f")]
    pub lambda_f: Option<f64>,
    /// Initial targets `HEART_HZ,LUNG_HZ`.
    #[arg(long = "f-init", value_name = "HZ,HZ")]
    pub f_init: Option<String>,
    /// Search bands `LO-HI,LO-HI`, heart then lung.
    #[arg(long, value_name = "LO-HI,LO-HI")]
    pub bands: Option<String>,
    /// heuristic | http | off
    #[arg(long)]
    pub advisor: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    /// Relative cost change that stops a pass.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Sweeps between advisor rounds.
    #[arg(long = "feedback-every")]
    pub feedback_every: Option<usize>,
    /// Advisor rounds per pass.
    #[arg(long = "feedback-rounds")]
    pub feedback_rounds: Option<usize>,
    /// Fail instead of falling back to the heuristic when the advisor errors.
    #[arg(long = "no-fallback")]
    pub no_fallback: bool,
}

#[derive(Debug, Args)]
pub struct SeparateArgs {
    /// Mixture WAV files (every channel is one mixture) or one CSV matrix.
    #[arg(short = 'i', long = "input", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Output directory; defaults to `./out-<timestamp>`.
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
    /// Sample rate of a CSV input.
    #[arg(long = "sample-rate")]
    pub sample_rate: Option<u32>,
    #[command(flatten)]
    pub sep: SepFlags,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "sample-rate", default_value_t = 1000)]
    pub sample_rate: u32,
    /// Length in seconds of the generated sources.
    #[arg(long, default_value_t = 16.0)]
    pub duration: f64,
    /// Number of mixtures for generated mixing.
    #[arg(long, default_value_t = 2)]
    pub mixtures: usize,
    /// Per-mixture SNR of added white noise.
    #[arg(long = "noise-db", allow_hyphen_values = true)]
    pub noise_db: Option<f64>,
    /// placement | uniform | identity | PATH to an M×N CSV.
    #[arg(long, default_value = "placement")]
    pub mixing: String,
    /// N×T CSV of source rows; required with a mixing file.
    #[arg(long)]
    pub sources: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// WAV files (channel 0) or CSV matrices (one signal per row).
    #[arg(short = 'i', long = "input", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Band searched for the fundamental frequency.
    #[arg(long, default_value = "20-200")]
    pub band: String,
    /// Sample rate of CSV inputs.
    #[arg(long = "sample-rate")]
    pub sample_rate: Option<u32>,
    /// Also write the features as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Estimate signals, one per source in reference order.
    #[arg(short = 'e', long = "estimate", required = true, num_args = 1..)]
    pub estimates: Vec<PathBuf>,
    /// Reference signals (WAV files or one CSV matrix).
    #[arg(short = 'r', long = "reference", required = true, num_args = 1..)]
    pub references: Vec<PathBuf>,
    /// Sample rate of CSV inputs.
    #[arg(long = "sample-rate")]
    pub sample_rate: Option<u32>,
    /// Metric CSV destination; stdout when omitted.
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
    /// Compare without the scale-invariant SNR gain.
    #[arg(long = "raw-snr")]
    pub raw_snr: bool,
    /// Value of the `method` column.
    #[arg(long, default_value = "external")]
    pub label: String,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1)]
    pub layers: usize,
    #[arg(long = "lambda-f", default_value_t = 0.01)]
    pub lambda_f: f64,
    /// Value of the `M` column; defaults to the number of references.
    #[arg(long)]
    pub mixtures: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// alpha-layers | lambda-f | num-mixtures
    pub kind: String,
    /// Synthetic cases per cell.
    #[arg(long, default_value_t = 5)]
    pub cases: usize,
    /// Length in seconds of each synthetic case.
    #[arg(long, default_value_t = 16.0)]
    pub duration: f64,
    #[arg(long = "sample-rate", default_value_t = 1000)]
    pub sample_rate: u32,
    /// placement | uniform
    #[arg(long, default_value = "placement")]
    pub mixing: String,
    #[arg(long, default_value = "-1,0,0.5,1,2,10", allow_hyphen_values = true)]
    pub alphas: String,
    #[arg(long = "layer-grid", default_value = "1,2,3")]
    pub layer_grid: String,
    #[arg(long, default_value = "0,0.001,0.01,0.1,1")]
    pub lambdas: String,
    #[arg(long = "m-values", default_value = "2,3,4,5,6,7")]
    pub m_values: String,
    /// mean | median over cases.
    #[arg(long, default_value = "mean")]
    pub aggregate: String,
    /// Write per-case rows instead of the aggregated table.
    #[arg(long)]
    pub raw: bool,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Metric CSV destination; stdout when omitted.
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub sep: SepFlags,
}
