//! The `ctxcrf` command-line tool.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 data error,
//! 3 internal invariant breach.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

/// Bad flags or flag combinations.
#[derive(Debug)]
pub struct UsageError(pub String);

/// A broken internal invariant.
#[derive(Debug)]
pub struct InternalError(pub String);

/// Some inputs failed; the rest were processed.
#[derive(Debug)]
pub struct PartialFailure(pub usize);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for InternalError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "internal error: {}", self.0)
    }
}

impl fmt::Display for PartialFailure {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "{} input(s) failed", self.0)
    }
}

impl std::error::Error for UsageError {}
impl std::error::Error for InternalError {}
impl std::error::Error for PartialFailure {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be positive and finite, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn non_negative_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be non-negative, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ctxcrf",
    version,
    about = "Superpixel CRFs with spatial co-occurrence context"
)]
pub struct Cli {
    /// Worker threads for per-image stages (default: all cores).
    #[arg(long, short = 'j', global = true)]
    pub jobs: Option<usize>,
    /// key = value file with default flag values; flags on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Over-segment images with SLIC and write graph skeletons and label rasters.
    Superpixels(SuperpixelsArgs),
    /// Fill node appearance features and edge features from images and rasters.
    Features(FeaturesArgs),
    /// Count spatial co-occurrences over a labeled corpus.
    Stats(StatsArgs),
    /// Learn CRF weights with the cutting-plane structured SVM.
    Train(TrainArgs),
    /// Label graphs with a trained model.
    Predict(PredictArgs),
    /// Compare predictions with ground truth.
    Eval(EvalArgs),
    /// Pick the context weight alpha by validation accuracy.
    TuneAlpha(TuneAlphaArgs),
}

#[derive(Debug, Args)]
pub struct SuperpixelsArgs {
    #[arg(long)]
    pub images: PathBuf,
    /// Per-pixel class maps (8-bit PNG/PGM, same file stem as the image, 255 = void).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub classes: usize,
    #[arg(long, default_value_t = 700)]
    pub target: usize,
    #[arg(long, default_value_t = 10.0, value_parser = positive_f64, allow_negative_numbers = true)]
    pub compactness: f64,
    #[arg(long, default_value_t = 10)]
    pub iterations: usize,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub graphs: PathBuf,
    #[arg(long)]
    pub images: PathBuf,
    /// Directory of `<stem>.labels.png` rasters (default: the graphs directory).
    #[arg(long)]
    pub rasters: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma list of boundary_length, luv_diff, color_hist, lbp; or "all" / "none".
    #[arg(long, default_value = "all")]
    pub pairwise_channels: String,
    #[arg(long, default_value_t = 8)]
    pub hist_bins: usize,
    #[arg(long, default_value_t = 1)]
    pub lbp_radius: usize,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub graphs: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Laplace smoothing added to every count (0 keeps hard exclusions).
    #[arg(long, default_value_t = 0.0, value_parser = non_negative_f64, allow_negative_numbers = true)]
    pub smoothing: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub graphs: PathBuf,
    /// Output MODEL file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100.0, value_parser = positive_f64, allow_negative_numbers = true)]
    pub c: f64,
    /// Candidate C values, used with --validation.
    #[arg(long, default_value = "1,10,100,1000")]
    pub c_grid: String,
    /// Labeled graphs for choosing C from --c-grid by global accuracy.
    #[arg(long)]
    pub validation: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-3, value_parser = positive_f64, allow_negative_numbers = true)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iterations: usize,
    /// uniform | inverse-frequency
    #[arg(long, default_value = "inverse-frequency")]
    pub loss: String,
    /// exhaustive | icm | expansion
    #[arg(long, default_value = "expansion")]
    pub algorithm: String,
    #[arg(long, default_value_t = 20)]
    pub max_sweeps: usize,
    #[arg(long, default_value_t = 3)]
    pub restarts: usize,
    /// auto | raw | svm (auto: svm for more than two classes)
    #[arg(long, default_value = "auto")]
    pub unary_mode: String,
    #[arg(long, default_value_t = 1e-3, value_parser = positive_f64, allow_negative_numbers = true)]
    pub svm_reg: f64,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub standardize: bool,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub relation_blocks: bool,
    /// Channels the graphs' edge features were built with (recorded in the model).
    #[arg(long)]
    pub pairwise_channels: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Training log CSV (default: <out>.log.csv).
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub graphs: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// plain | mutex | cooccur (default: the model's)
    #[arg(long)]
    pub pairwise_mode: Option<String>,
    #[arg(long)]
    pub cooccur: Option<PathBuf>,
    /// Context weight (default: the model's).
    #[arg(long, value_parser = positive_f64, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, default_value = "expansion")]
    pub algorithm: String,
    #[arg(long, default_value_t = 20)]
    pub max_sweeps: usize,
    #[arg(long, default_value_t = 3)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write `<stem>.pred.png` class maps using these label rasters.
    #[arg(long)]
    pub rasters: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Graphs carrying predicted labels.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Graphs carrying ground-truth labels, same file names.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub foreground: Option<usize>,
    /// Comma-separated class names for the report.
    #[arg(long)]
    pub class_names: Option<String>,
    /// Pixel-exact evaluation: label rasters ...
    #[arg(long, requires = "pixel_truth")]
    pub rasters: Option<PathBuf>,
    /// ... and per-pixel class maps.
    #[arg(long, requires = "rasters")]
    pub pixel_truth: Option<PathBuf>,
    /// Directory for metrics.txt and metrics.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TuneAlphaArgs {
    /// Labeled validation graphs.
    #[arg(long)]
    pub graphs: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub cooccur: Option<PathBuf>,
    #[arg(long, default_value = "cooccur")]
    pub pairwise_mode: String,
    #[arg(long, default_value = "0.5,1.0,1.5,2.0")]
    pub grid: String,
    #[arg(long, default_value = "expansion")]
    pub algorithm: String,
    #[arg(long, default_value_t = 20)]
    pub max_sweeps: usize,
    #[arg(long, default_value_t = 3)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write a copy of the model with the chosen mode and alpha.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Maps an error chain to an exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if cause.is::<InternalError>() {
            return EXIT_INTERNAL;
        }
        if let Some(e) = cause.downcast_ref::<ctxcrf::Error>() {
            return match e {
                ctxcrf::Error::InvalidConfig(_) | ctxcrf::Error::MissingTable(_) => EXIT_USAGE,
                _ => EXIT_DATA,
            };
        }
    }
    EXIT_DATA
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run(args: Vec<OsString>) -> i32 {
    let args = match config::inject_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_USAGE;
        }
    };
    let matches = match Cli::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return EXIT_USAGE;
        }
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return EXIT_USAGE;
        }
        // fails harmlessly if a pool already exists in this process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let resolved = config::resolved_config(name, sub);
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
        dispatch(&cli.command, &resolved)
    }));
    match result {
        Ok(Ok(())) => EXIT_OK,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
        Err(_) => {
            eprintln!("error: internal invariant violated (panic)");
            EXIT_INTERNAL
        }
    }
}

fn dispatch(command: &Command, resolved: &str) -> anyhow::Result<()> {
    match command {
        Command::Superpixels(a) => commands::superpixels(a, resolved),
        Command::Features(a) => commands::features(a, resolved),
        Command::Stats(a) => commands::stats(a, resolved),
        Command::Train(a) => commands::train(a, resolved),
        Command::Predict(a) => commands::predict(a, resolved),
        Command::Eval(a) => commands::eval(a, resolved),
        Command::TuneAlpha(a) => commands::tune_alpha(a, resolved),
    }
}
