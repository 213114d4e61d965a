use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "urllc",
    version,
    about = "Short-packet link design with ordered-statistics decoding",
    args_override_self = true
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Output format
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Shorthand for --format json
    #[arg(long, global = true, conflicts_with = "csv")]
    pub json: bool,

    /// Shorthand for --format csv
    #[arg(long, global = true)]
    pub csv: bool,

    /// Seed for every random draw (required when CI is set)
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Simulation worker threads; 0 uses every core
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,

    /// JSON file of flag values, keyed by long flag name
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build or inspect code files
    #[command(subcommand)]
    Codes(CodesCommand),
    /// Capacity, dispersion and normal-approximation rate over an SNR grid
    Bounds(BoundsArgs),
    /// Per-information-bit decoder complexity
    Complexity(ComplexityArgs),
    /// Aggregate latency of a decoder on a given receiver
    Latency(LatencyArgs),
    /// Largest decoder order that fits a complexity or latency budget
    MaxOrder(MaxOrderArgs),
    /// Fit the complexity/power-penalty law to measured points
    Fit(FitArgs),
    /// Solve a link-design problem
    Optimize(OptimizeArgs),
    /// Monte Carlo decoding runs
    #[command(subcommand)]
    Simulate(SimulateCommand),
}

#[derive(Subcommand, Debug)]
pub enum CodesCommand {
    /// Write an extended BCH code to a file
    Gen(CodesGenArgs),
    /// Describe a code file
    Info(CodesInfoArgs),
}

#[derive(Args, Debug)]
pub struct CodesGenArgs {
    /// Length and dimension of the extended BCH code
    #[arg(long, num_args = 2, value_names = ["N", "K"], required = true)]
    pub ebch: Vec<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CodesInfoArgs {
    pub file: PathBuf,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub eps: f64,
    /// start:step:stop in dB, inclusive
    #[arg(long, default_value = "0:0.5:10", allow_hyphen_values = true)]
    pub snr_db_range: String,
}

#[derive(Args, Debug, Clone)]
pub struct OrderArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    /// Quantization bits
    #[arg(long, default_value_t = 8)]
    pub q: u32,
}

#[derive(Args, Debug, Clone)]
pub struct HardwareArgs {
    /// Symbol duration (s)
    #[arg(long, default_value_t = 1e-6)]
    pub ts: f64,
    /// Time per binary operation (s)
    #[arg(long, default_value_t = 1e-9)]
    pub tb: f64,
    /// Parallelizable fraction of decoding
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    /// Processor count
    #[arg(long, default_value_t = 1)]
    pub procs: u32,
}

#[derive(Args, Debug)]
pub struct ComplexityArgs {
    #[command(flatten)]
    pub code: OrderArgs,
    /// Decoder order, e.g. 2, 2.5 or 5/2
    #[arg(long)]
    pub s: String,
}

#[derive(Args, Debug)]
pub struct LatencyArgs {
    #[command(flatten)]
    pub code: OrderArgs,
    #[arg(long)]
    pub s: String,
    #[command(flatten)]
    pub hw: HardwareArgs,
}

#[derive(Args, Debug)]
pub struct MaxOrderArgs {
    #[command(flatten)]
    pub code: OrderArgs,
    /// Operations per information bit
    #[arg(long, conflicts_with = "lmax")]
    pub budget: Option<f64>,
    /// Latency limit (s); the budget follows from the receiver timing
    #[arg(long)]
    pub lmax: Option<f64>,
    #[command(flatten)]
    pub hw: HardwareArgs,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Points CSV
    #[arg(long)]
    pub points: PathBuf,
    /// Blocklength whose points are fitted
    #[arg(long)]
    pub n: usize,
    /// Model table to write
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Merge into an existing table at --out instead of replacing it
    #[arg(long, requires = "out")]
    pub append: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProblemArg {
    Latency,
    Energy,
    InfoBits,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    #[arg(value_enum)]
    pub problem: ProblemArg,
    /// Information bits (latency and energy problems)
    #[arg(long)]
    pub k: Option<usize>,
    /// Maximum codeword error probability
    #[arg(long)]
    pub eps: f64,
    /// Maximum SNR in dB; `inf` lifts the limit
    #[arg(long, allow_negative_numbers = true)]
    pub rho_max_db: f64,
    /// Maximum aggregate latency (s)
    #[arg(long)]
    pub lmax: Option<f64>,
    #[command(flatten)]
    pub hw: HardwareArgs,
    /// Model table JSON
    #[arg(long, required_unless_present_all = ["model_a", "model_b"])]
    pub models: Option<PathBuf>,
    /// Single synthetic model: coefficient a
    #[arg(long, requires = "model_b", conflicts_with = "models")]
    pub model_a: Option<f64>,
    /// Single synthetic model: coefficient b
    #[arg(long, requires = "model_a")]
    pub model_b: Option<f64>,
    #[arg(long)]
    pub n_min: Option<usize>,
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Write the per-blocklength objective here
    #[arg(long)]
    pub csv_curve: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct CodeSource {
    /// Code file
    #[arg(long, conflicts_with = "ebch")]
    pub code: Option<PathBuf>,
    /// Build an extended BCH code on the fly
    #[arg(long, num_args = 2, value_names = ["N", "K"])]
    pub ebch: Option<Vec<usize>>,
}

#[derive(Args, Debug, Clone)]
pub struct DecoderArgs {
    /// Decoder order
    #[arg(long, default_value = "1")]
    pub s: String,
    #[arg(long, default_value_t = 8)]
    pub q: u32,
    /// Stop a decode at the first pattern that explains the hard decisions
    #[arg(long)]
    pub early_exit: bool,
}

#[derive(Subcommand, Debug)]
pub enum SimulateCommand {
    /// Codeword error probability at one SNR
    Cep(CepArgs),
    /// SNR at which the error probability crosses a target
    SnrForCep(SnrArgs),
    /// Power penalty versus complexity for several orders
    Tradeoff(TradeoffArgs),
}

#[derive(Args, Debug)]
pub struct CepArgs {
    #[command(flatten)]
    pub code: CodeSource,
    #[command(flatten)]
    pub decoder: DecoderArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub snr_db: f64,
    #[arg(long, default_value_t = 100)]
    pub target_errors: u64,
    #[arg(long, default_value_t = 10_000_000)]
    pub max_trials: u64,
}

#[derive(Args, Debug, Clone)]
pub struct SearchArgs {
    /// Target codeword error probability
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lo_db: f64,
    #[arg(long, default_value_t = 6.0, allow_negative_numbers = true)]
    pub hi_db: f64,
    /// Bracket width at which bisection stops (dB)
    #[arg(long, default_value_t = 0.05)]
    pub tol_db: f64,
    #[arg(long, default_value_t = 100)]
    pub target_errors: u64,
    /// Per-probe trial cap (default 4 x target-errors / eps)
    #[arg(long)]
    pub max_trials: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SnrArgs {
    #[command(flatten)]
    pub code: CodeSource,
    #[command(flatten)]
    pub decoder: DecoderArgs,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Args, Debug)]
pub struct TradeoffArgs {
    #[command(flatten)]
    pub code: CodeSource,
    /// Comma-separated decoder orders
    #[arg(long, value_delimiter = ',', required = true)]
    pub orders: Vec<String>,
    #[arg(long, default_value_t = 8)]
    pub q: u32,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Points CSV to write
    #[arg(long)]
    pub out: Option<PathBuf>,
}
