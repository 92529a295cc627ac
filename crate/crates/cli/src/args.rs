use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "specforge", version, about = "Mine, score and verify hyperrectangle specifications")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset as CSV.
    Synth(SynthArgs),
    /// Generate a specification set from a dataset.
    Gen(GenArgs),
    /// Score a specification set on labelled data.
    Eval(EvalArgs),
    /// Check a network against a specification set.
    Verify(VerifyArgs),
    /// Draw a 2-D specification set over its data as SVG.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(subcommand)]
    pub kind: SynthKind,
}

#[derive(Debug, Subcommand)]
pub enum SynthKind {
    /// Interleaved 2-D spiral arms, one class per arm.
    Spiral {
        #[arg(long, default_value_t = 300, value_parser = clap::value_parser!(u64).range(1..))]
        per_class: u64,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(2..))]
        classes: u64,
        /// Std of the angular gaussian noise.
        #[arg(long, default_value_t = 0.2, value_parser = non_negative)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Windowed throughput trace (regression), optionally binned.
    Timeseries {
        #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(2..))]
        len: u64,
        #[arg(long, default_value_t = 919_264.0, value_parser = positive)]
        peak: f64,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
        window: u64,
        /// Bin labels and features into this many classes.
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        bins: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Grid,
    Cluster,
    Tree,
    Human,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Classification,
    Regression,
}

impl From<TaskArg> for specforge::TaskKind {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Classification => specforge::TaskKind::Classification,
            TaskArg::Regression => specforge::TaskKind::Regression,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Dataset CSV (not needed for `--algo human`).
    pub data: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Algo::Tree)]
    pub algo: Algo,
    /// Label column name or zero-based index.
    #[arg(long, default_value = "label")]
    pub label: String,
    #[arg(long, value_enum, default_value_t = TaskArg::Classification)]
    pub task: TaskArg,
    /// Grid cells per dimension.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub beta: u64,
    /// Number of clusters.
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    #[arg(long, default_value_t = 300)]
    pub max_iters: usize,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub min_leaf: usize,
    #[arg(long, default_value_t = 2)]
    pub min_split: usize,
    /// Throughput bins for the human baseline.
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    /// Fraction of rows used for generation.
    #[arg(long, default_value_t = 0.9, value_parser = open_unit)]
    pub split: f64,
    /// Generate from the whole file (it is already a generation fold).
    #[arg(long, conflicts_with_all = ["no_shuffle", "eval_out"])]
    pub no_split: bool,
    /// Chronological split instead of a shuffled one.
    #[arg(long)]
    pub no_shuffle: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Spec file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the generation fold here.
    #[arg(long)]
    pub gen_out: Option<PathBuf>,
    /// Also write the evaluation fold here.
    #[arg(long)]
    pub eval_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Spec file.
    pub specs: PathBuf,
    /// Evaluation dataset CSV.
    pub data: PathBuf,
    #[arg(long, default_value = "label")]
    pub label: String,
    /// Output-range filter strength, in (0, 1).
    #[arg(long, default_value_t = 0.1, value_parser = open_unit)]
    pub alpha: f64,
    /// JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Include per-point verdicts in the JSON report.
    #[arg(long)]
    pub per_point: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Network file.
    pub network: PathBuf,
    /// Spec file.
    pub specs: PathBuf,
    /// Dataset used for clamping bounds and as the first falsification source.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value = "label")]
    pub label: String,
    /// Uniform samples per spec.
    #[arg(long, default_value_t = 10_000)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Counterexamples kept per spec.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_counterexamples: u64,
    /// JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Counterexample CSV path.
    #[arg(long)]
    pub counterexamples: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Spec file.
    pub specs: PathBuf,
    /// Dataset CSV.
    pub data: PathBuf,
    #[arg(long, default_value = "label")]
    pub label: String,
    /// SVG path.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn open_unit(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} must lie strictly between 0 and 1"))
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be >= 0"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be > 0"))
    }
}
