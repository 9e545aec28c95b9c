//! Command-line experiments over the `hypercount` library: host generation,
//! random partitions, the stitching pipeline, exact counts, factors, absorber
//! classification and certificate verification, with JSON or CSV reports.

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hypercount::Budget;
use num_rational::Rational64;

pub mod commands;
pub mod generate;
pub mod report;
pub mod schedule;

pub use report::{Format, Report, RunConfig};
pub use schedule::Sha256Schedule;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input, failed preconditions.
    Invalid(String),
    Budget(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) | CliError::Budget(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<hypercount::Error> for CliError {
    fn from(e: hypercount::Error) -> Self {
        match e {
            hypercount::Error::BudgetExhausted { .. } => CliError::Budget(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

/// Adds the failing stage to an error message.
pub(crate) fn at_stage(stage: &'static str) -> impl Fn(hypercount::Error) -> CliError {
    move |e| match CliError::from(e) {
        CliError::Invalid(m) => CliError::Invalid(format!("{stage}: {m}")),
        CliError::Budget(m) => CliError::Budget(format!("{stage}: {m}")),
        CliError::Io(m) => CliError::Io(format!("{stage}: {m}")),
    }
}

fn rational(s: &str) -> Result<Rational64, String> {
    hypercount::parse_rational(s).map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "hypercount",
    version,
    about = "Seeded experiments on dense k-uniform hypergraphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Debug, Args)]
pub struct Common {
    /// Root seed; every stage derives its own seeds from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Node budget of each exhaustive search.
    #[arg(long, global = true, default_value_t = Budget::DEFAULT_NODES)]
    pub budget: u64,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output file; must not exist yet. Defaults to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Fractional bits of the directed-rounding brackets.
    #[arg(long, global = true, default_value_t = hypercount::bounds::DEFAULT_PRECISION_BITS)]
    pub precision_bits: u32,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a host in edge-list format to --out (report on stdout), or to stdout.
    Generate(GenerateArgs),
    /// Sample random bisections and check their goodness.
    Partition(PartitionArgs),
    /// Run partition, goodness check and stitching per trial, with count bounds.
    #[command(alias = "pipeline")]
    Stitch(StitchArgs),
    /// Exact number of Hamilton cycles, tight-cycle powers or F-factors.
    Count(CountArgs),
    /// Find and optionally count F-factors.
    Factors(FactorsArgs),
    /// Classify every (k-ℓ)-set by its number of absorbing paths.
    AbsorbClassify(AbsorbArgs),
    /// Check a cycle, path or factor certificate against a host.
    Verify(VerifyArgs),
}

#[derive(Clone, Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub family: generate::Family,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub ell: Option<usize>,
    /// Pattern size K_t^(k) of a planted factor (default k, a matching).
    #[arg(long)]
    pub t: Option<usize>,
    /// Edge probability; noise density for the planted families (default 0).
    #[arg(long)]
    pub p: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TargetKind {
    Cycle,
    Path,
    Power,
    Factor,
}

#[derive(Clone, Debug, Args)]
pub struct TargetArgs {
    #[arg(long, value_enum, default_value_t = TargetKind::Cycle)]
    pub target: TargetKind,
    #[arg(long)]
    pub ell: Option<usize>,
    /// Power of the tight cycle, or the factor pattern size.
    #[arg(long)]
    pub t: Option<usize>,
    /// Factor pattern in edge-list format (default K_t^(k)).
    #[arg(long)]
    pub pattern: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct GoodnessArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long, value_parser = rational)]
    pub delta: Rational64,
    #[arg(long, value_parser = rational)]
    pub gamma: Rational64,
}

#[derive(Clone, Debug, Args)]
pub struct PartitionArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub goodness: GoodnessArgs,
    /// Block sizes become multiples of k-ℓ.
    #[arg(long, conflicts_with = "t")]
    pub ell: Option<usize>,
    /// Block sizes become multiples of t.
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub trials: u64,
}

#[derive(Clone, Debug, Args)]
pub struct StitchArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub goodness: GoodnessArgs,
    #[arg(long, default_value_t = 10)]
    pub trials: u64,
    /// Stitch every sampled partition, good or not.
    #[arg(long)]
    pub stitch_all: bool,
    #[arg(long, default_value_t = hypercount::stitch::DEFAULT_JUNCTION_RETRIES)]
    pub junction_retries: usize,
    /// Also count the target exactly within --budget.
    #[arg(long)]
    pub exact: bool,
    /// Certificates kept in the report.
    #[arg(long, default_value_t = 1)]
    pub samples: usize,
    /// Check factor partitions for (n, d, μ)-goodness with this d.
    #[arg(long, requires = "mu")]
    pub d: Option<usize>,
    #[arg(long, value_parser = rational, requires = "d")]
    pub mu: Option<Rational64>,
}

#[derive(Clone, Debug, Args)]
pub struct CountArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub target: TargetArgs,
    /// Compare the count with the theorem bound for this constant C.
    #[arg(long, value_parser = rational)]
    pub c: Option<Rational64>,
}

#[derive(Clone, Debug, Args)]
pub struct FactorsArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Pattern K_t^(k) (default k, perfect matchings).
    #[arg(long, conflicts_with = "pattern")]
    pub t: Option<usize>,
    #[arg(long)]
    pub pattern: Option<PathBuf>,
    /// Count all F-factors.
    #[arg(long)]
    pub count: bool,
    /// Compare perfect matchings with Hamilton 0-cycle arrangements.
    #[arg(long)]
    pub relation: bool,
}

#[derive(Clone, Debug, Args)]
pub struct AbsorbArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub ell: usize,
    /// Vertex count of the absorbing paths.
    #[arg(long)]
    pub t: usize,
    #[arg(long, value_parser = rational)]
    pub beta: Rational64,
}

#[derive(Clone, Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub target: TargetArgs,
    /// Vertex order (whitespace or JSON list, or an object with `order`), or
    /// factor copies (JSON list of lists, or an object with `copies`).
    #[arg(long)]
    pub certificate: PathBuf,
    /// Partition file, one block per line, to check that a cycle respects it.
    #[arg(long)]
    pub partition: Option<PathBuf>,
}

/// Runs one command and writes its output.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    commands::run(cli)
}
