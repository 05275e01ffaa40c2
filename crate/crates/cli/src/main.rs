//! `metaopt` — experiment harness for the optimization engines.
//!
//! Subcommands: `gen` writes a random Euclidean instance file, `run sa` /
//! `run bnb` execute an engine on an instance with optional checkpointing,
//! and `report` renders stored run records as a table.
//!
//! Exit codes: 0 success, 1 internal error, 2 usage error, 3 checkpoint
//! parameter mismatch. Standard output carries only run records and report
//! tables; diagnostics go to standard error.

mod instance;
mod records;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    ParamsMismatch(String),
    Internal(anyhow::Error),
}

macro_rules! internal_from {
    ($($ty:ty),* $(,)?) => {
        $(impl From<$ty> for CliError {
            fn from(err: $ty) -> Self {
                CliError::Internal(err.into())
            }
        })*
    };
}

internal_from!(
    anyhow::Error,
    std::io::Error,
    serde_json::Error,
    metaopt::EngineError,
    metaopt::StoreError,
    metaopt::ProblemError,
);

#[derive(Parser)]
#[command(
    name = "metaopt",
    version,
    about = "Combinatorial optimization experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random Euclidean instance file
    Gen(GenArgs),
    /// Run an engine on an instance, resuming from a checkpoint when one exists
    #[command(subcommand)]
    Run(RunCommand),
    /// Render stored run records as a result table
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum RunCommand {
    /// Simulated annealing
    Sa(SaArgs),
    /// Branch and bound
    Bnb(BnbArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Number of cities
    #[arg(long)]
    n: usize,
    /// Instance seed; identical flags reproduce identical file bytes
    #[arg(long)]
    seed: u64,
    /// Mean of the coordinate distribution
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    /// Standard deviation of the coordinate distribution
    #[arg(long, default_value_t = 5.0)]
    sigma: f64,
    /// Output path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CommonRunArgs {
    /// Instance file path
    #[arg(long)]
    instance: PathBuf,
    /// Run name: checkpoint key and report row label
    #[arg(long)]
    name: String,
    /// Wall-clock limit in seconds (unlimited when omitted)
    #[arg(long)]
    time_limit: Option<f64>,
    /// Generator seed for fresh runs; resumed runs restore the generator
    /// from the checkpoint and ignore this flag
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Checkpoint root (falls back to METAOPT_CKPT_DIR, then ./checkpoints)
    #[arg(long)]
    checkpoint_dir: Option<PathBuf>,
    /// Persist a checkpoint after the run
    #[arg(long)]
    persist: bool,
}

#[derive(Args)]
struct SaArgs {
    #[command(flatten)]
    common: CommonRunArgs,
    /// Iteration budget for this run
    #[arg(long, default_value_t = 1_000_000)]
    iters: u64,
    /// Random-restart probability per iteration
    #[arg(long, default_value_t = 1.0 / 1_500_000.0)]
    reset_p: f64,
}

#[derive(Args)]
struct BnbArgs {
    #[command(flatten)]
    common: CommonRunArgs,
    /// Node selection strategy
    #[arg(long, value_enum)]
    strategy: StrategyFlag,
    /// Traditional or look-ahead search
    #[arg(long = "type", value_enum)]
    bnb_type: TypeFlag,
    /// Node pop budget for this run
    #[arg(long, default_value_t = 1_000_000)]
    iters_limit: u64,
    /// Initial solution: `identity`, `none`, or a path to a JSON tour file
    #[arg(long, default_value = "identity")]
    initial: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyFlag {
    /// depth-first
    Df,
    /// depth-first-best-first
    Dfbef,
    /// best-first-depth-first
    Befdf,
}

impl StrategyFlag {
    fn to_core(self) -> metaopt::SelectionStrategy {
        match self {
            Self::Df => metaopt::SelectionStrategy::DepthFirst,
            Self::Dfbef => metaopt::SelectionStrategy::DepthFirstBestFirst,
            Self::Befdf => metaopt::SelectionStrategy::BestFirstDepthFirst,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TypeFlag {
    Traditional,
    Lookahead,
}

impl TypeFlag {
    fn to_core(self) -> metaopt::BnbType {
        match self {
            Self::Traditional => metaopt::BnbType::Traditional,
            Self::Lookahead => metaopt::BnbType::LookAhead,
        }
    }
}

#[derive(Args)]
struct ReportArgs {
    /// Checkpoint root (falls back to METAOPT_CKPT_DIR, then ./checkpoints)
    #[arg(long)]
    checkpoint_dir: Option<PathBuf>,
    /// Names to include, comma-separated or repeated; all stored names
    /// when omitted
    #[arg(long, value_delimiter = ',')]
    names: Vec<String>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Md)]
    format: ReportFormat,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportFormat {
    Csv,
    Md,
}

/// Checkpoint root precedence: flag, then METAOPT_CKPT_DIR, then
/// ./checkpoints.
fn resolve_checkpoint_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("METAOPT_CKPT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("./checkpoints"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => run::cmd_gen(args),
        Command::Run(RunCommand::Sa(args)) => run::cmd_run_sa(args),
        Command::Run(RunCommand::Bnb(args)) => run::cmd_run_bnb(args),
        Command::Report(args) => report::cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::ParamsMismatch(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Internal(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
