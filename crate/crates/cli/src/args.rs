use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

/// Typed anomaly benchmarks: generate, inject, detect, classify, transform,
/// evaluate, report and plot.
///
/// Every flag of a subcommand can also be given in a JSON object passed with
/// `--config`, using the flag name with underscores as key. Flags given on the
/// command line take precedence.
#[derive(Debug, Parser)]
#[command(name = "anomtype", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct Global {
    /// Seed for all random draws.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for output files (created when missing; default ".").
    #[arg(short = 'o', long = "output-dir", global = true)]
    pub output_dir: Option<PathBuf>,
    /// Format of score, classification and report files.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// JSON file with default values for any flag.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a base dataset (optionally with injected anomalies) or a series.
    Generate(GenerateArgs),
    /// Append ground-truth-labeled anomalies to a dataset or series.
    Inject(InjectArgs),
    /// Run reference detectors and write score files.
    Detect(DetectArgs),
    /// Assign an anomaly type to each case.
    Classify(ClassifyArgs),
    /// Move a dataset to another conceptual level.
    Transform(TransformArgs),
    /// Evaluate detectors or external score files per anomaly type.
    Evaluate(EvaluateArgs),
    /// Print a detector × type table from an evaluation report.
    Report(ReportArgs),
    /// Render a scatter plot with anomalies highlighted by type.
    Plot(PlotArgs),
}

/// Dataset CSV plus its schema; the schema defaults to `schema.json` next to
/// the data file.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct DataArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct ThresholdArgs {
    /// Extreme-value cutoff in scale units.
    #[arg(long)]
    pub k_extreme: Option<f64>,
    /// Center and scale estimator: mad or sd.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub leave_one_out: Option<bool>,
    /// Rare-class frequency cutoff.
    #[arg(long)]
    pub tau_rare: Option<f64>,
    /// Rare-class count cutoff.
    #[arg(long)]
    pub c_rare: Option<usize>,
    /// Number of nearest neighbors.
    #[arg(long)]
    pub knn: Option<usize>,
    /// Robust-standardize continuous attributes before the kNN search.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub standardize: Option<bool>,
    /// Share of cases flagged by the kNN detector.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Largest class-combination size.
    #[arg(long)]
    pub combo_order: Option<usize>,
    /// Minimum global frequency for a locally rare class.
    #[arg(long)]
    pub g_min: Option<f64>,
    /// Maximum local frequency for a locally rare class.
    #[arg(long)]
    pub l_max: Option<f64>,
    /// Equal-width bins for the rare mid-range check (0 disables it).
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    /// Base dataset spec (JSON).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Injection spec (JSON) applied to the generated base.
    #[arg(long)]
    pub inject: Option<PathBuf>,
    /// Use the built-in two-cluster reference benchmark.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub reference: Option<bool>,
    /// Injected cases per type for the reference benchmark (default 10).
    #[arg(long)]
    pub count: Option<usize>,
    /// Series spec (JSON); writes a time/value series instead.
    #[arg(long)]
    pub series: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct InjectArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: DataArgs,
    /// Injection spec (JSON).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Injected cases per type, overriding the spec counts.
    #[arg(long)]
    pub count: Option<usize>,
    /// Existing ground truth to extend.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Within-series anomaly (JSON with a "kind" field) for series input.
    #[arg(long)]
    pub series_anomaly: Option<PathBuf>,
    /// Series period.
    #[arg(long)]
    pub period: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct DetectArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: DataArgs,
    /// Detector ids (type1..type6), comma separated, or "all".
    #[arg(long)]
    pub detector: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub thresholds: ThresholdArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct ClassifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: DataArgs,
    /// Case ids to classify (default: all).
    #[arg(long, value_delimiter = ',')]
    pub cases: Option<Vec<u64>>,
    /// Also report other types whose checks fired.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub multi_label: Option<bool>,
    /// Take default thresholds from this ground truth file.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub thresholds: ThresholdArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformOp {
    /// First differences of a series.
    Difference,
    /// Cumulative sum of a differenced series.
    Cumsum,
    /// Sliding windows over a symbol sequence.
    Windowize,
    /// One case per cycle of a series.
    Cycles,
    /// Group-level aggregation.
    Aggregate,
    /// Seeded random reordering of series values.
    Shuffle,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct TransformArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: DataArgs,
    #[arg(long, value_enum)]
    pub op: Option<TransformOp>,
    /// Symbol sequence, one token per line (windowize).
    #[arg(long)]
    pub symbols: Option<PathBuf>,
    /// Window width (windowize).
    #[arg(long)]
    pub width: Option<usize>,
    /// Cycle length (cycles).
    #[arg(long)]
    pub period: Option<usize>,
    /// Shape class cutoff (cycles).
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Grouping attribute (aggregate).
    #[arg(long)]
    pub key: Option<String>,
    /// Aggregations as attribute:function, e.g. x:mean (aggregate).
    #[arg(long, value_delimiter = ',')]
    pub agg: Option<Vec<String>>,
    /// Starting value (cumsum).
    #[arg(long)]
    pub initial: Option<f64>,
    /// Ground truth to carry along (shuffle).
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct EvaluateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: DataArgs,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// External score files (case_id,score[,flag]).
    #[arg(long, value_delimiter = ',')]
    pub scores: Option<Vec<PathBuf>>,
    /// Reference detectors to run when no score files are given (default all).
    #[arg(long)]
    pub detectors: Option<String>,
    /// Benchmark name recorded in the report.
    #[arg(long)]
    pub name: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub thresholds: ThresholdArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct ReportArgs {
    /// Evaluation report (JSON).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// rank_auc, recall_at_k, precision or recall (default: all four).
    #[arg(long)]
    pub metric: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct PlotArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: DataArgs,
    /// Continuous attribute on the horizontal axis.
    #[arg(long)]
    pub x: Option<String>,
    /// Continuous attribute on the vertical axis.
    #[arg(long)]
    pub y: Option<String>,
    /// Categorical attribute for marker color.
    #[arg(long)]
    pub class: Option<String>,
    /// Ground truth whose cases are enlarged.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Classification output whose typed cases are enlarged.
    #[arg(long)]
    pub attributions: Option<PathBuf>,
}
