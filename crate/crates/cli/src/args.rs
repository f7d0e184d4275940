//! Command-line grammar.

use std::path::PathBuf;
use std::str::FromStr;

use capmeter_core::bounds::PChoice;
use capmeter_core::data::Normalize;
use capmeter_core::nn::InitScheme;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "capmeter", version, about = "Unit-wise capacity measures and generalization bounds for two-layer ReLU networks")]
#[command(arg_required_else_help = true, propagate_version = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one network and save a checkpoint with its report.
    Train(TrainArgs),
    /// Train one network per width into a directory.
    Sweep(SweepArgs),
    /// Per-unit and layer-level measures of a checkpoint.
    Measure(MeasureArgs),
    /// Generalization bounds and comparator measures of a checkpoint.
    Bounds(BoundsArgs),
    /// Aggregate a sweep directory into a CSV table and an SVG chart.
    Compare(CompareArgs),
    /// Certify the Rademacher lower bound on the Hadamard construction.
    Lowerbound(LowerboundArgs),
    /// Size of the l_p-ball cover, optionally enumerated.
    Cover(CoverArgs),
    /// Run the built-in property checks.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizeArg {
    UnitRange,
    None,
}

impl From<NormalizeArg> for Normalize {
    fn from(n: NormalizeArg) -> Self {
        match n {
            NormalizeArg::UnitRange => Normalize::UnitRange,
            NormalizeArg::None => Normalize::None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// IDX directory (`<split>-images-idx3-ubyte`, `<split>-labels-idx1-ubyte`) or CSV file.
    #[arg(long, conflicts_with = "synthetic")]
    pub data: Option<PathBuf>,
    /// Which IDX files to read from a data directory.
    #[arg(long, value_enum, default_value = "train")]
    pub split: Split,
    /// Gaussian blobs: `d,m,c,separation,seed`.
    #[arg(long, value_name = "D,M,C,SEP,SEED")]
    pub synthetic: Option<String>,
    /// Keep only the first N samples.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Fraction of labels replaced by uniform random classes.
    #[arg(long, default_value_t = 0.0)]
    pub random_labels: f64,
    /// Seed of the label corruption; defaults to `--seed` where there is one.
    #[arg(long)]
    pub label_seed: Option<u64>,
    #[arg(long, value_enum, default_value = "unit-range")]
    pub normalize: NormalizeArg,
}

impl DataArgs {
    pub fn given(&self) -> bool {
        self.data.is_some() || self.synthetic.is_some()
    }
}

/// Parses `uniform_fan_in` or `gaussian:<sigma>`.
pub fn parse_init(s: &str) -> Result<InitScheme, String> {
    match s.trim() {
        "uniform_fan_in" | "uniform-fan-in" | "uniform" => Ok(InitScheme::UniformFanIn),
        t => match t.strip_prefix("gaussian:") {
            Some(sigma) => sigma
                .parse::<f64>()
                .map(|sigma| InitScheme::Gaussian { sigma })
                .map_err(|_| format!("bad gaussian sigma {sigma:?}")),
            None => Err(format!("unknown init {t:?}; expected uniform_fan_in or gaussian:<sigma>")),
        },
    }
}

#[derive(Debug, Clone, Args)]
pub struct OptimArgs {
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    /// Stop once the epoch-mean cross-entropy falls below this value.
    #[arg(long, default_value_t = 0.01)]
    pub stop_loss: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `uniform_fan_in` or `gaussian:<sigma>`.
    #[arg(long, default_value = "uniform_fan_in", value_parser = parse_init)]
    pub init: InitScheme,
    /// Visit samples in file order instead of reshuffling every epoch.
    #[arg(long)]
    pub no_shuffle: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// JSON file of flag values; flags on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    /// Hidden width.
    #[arg(long)]
    pub h: usize,
    #[command(flatten)]
    pub optim: OptimArgs,
    /// Checkpoint path; the report goes to `<stem>.report.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated hidden widths.
    #[arg(long, value_delimiter = ',', required = true)]
    pub widths: Vec<usize>,
    #[command(flatten)]
    pub optim: OptimArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Train widths one after another on the calling thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Args)]
pub struct MeasureArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub ckpt: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Panel JSON path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Append a one-row summary to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value_t = 5.0)]
    pub gamma_percentile: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaArg {
    /// Margin percentile on the evaluation data.
    Auto,
    Value(f64),
}

impl FromStr for GammaArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "auto" => Ok(GammaArg::Auto),
            t => t.parse::<f64>().map(GammaArg::Value).map_err(|_| format!("expected auto or a number, got {t:?}")),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct MarginArgs {
    /// `auto` takes the `--gamma-percentile` margin percentile on the data.
    #[arg(long, default_value = "auto")]
    pub gamma: GammaArg,
    #[arg(long, default_value_t = 5.0)]
    pub gamma_percentile: f64,
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    /// Exponents for the l_p bound: numbers, `inf` or `lnh`.
    #[arg(long, value_delimiter = ',', default_value = "2,4,lnh")]
    pub p: Vec<PChoice>,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub ckpt: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub margin: MarginArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub sweep_dir: PathBuf,
    /// Training data; defaults to the dataset recorded in the sweep manifest.
    #[command(flatten)]
    pub data: DataArgs,
    /// Held-out data for the test error column.
    #[arg(long)]
    pub test_data: Option<PathBuf>,
    #[command(flatten)]
    pub margin: MarginArgs,
    /// CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Columns to plot; defaults to every max-normalized bound column.
    #[arg(long, value_delimiter = ',')]
    pub svg_columns: Vec<String>,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Args)]
pub struct LowerboundArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input dimension and width are `2^k`.
    #[arg(long)]
    pub k: u32,
    /// Copies of each basis vector.
    #[arg(long)]
    pub n: usize,
    /// Unit impact budgets (length `2^k`); all ones when omitted.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    /// Unit capacity budgets (length `2^k`); all ones when omitted.
    #[arg(long, value_delimiter = ',')]
    pub beta: Vec<f64>,
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = capmeter_core::lowerbound::DEFAULT_TRIALS)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub sequential: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CoverArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dimension of the ball.
    #[arg(long = "D", value_name = "D")]
    pub dim: usize,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Enumerate the boxes and check them against the count.
    #[arg(long)]
    pub construct: bool,
    /// JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SelftestArgs {
    /// Random trials per property.
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
