use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "concentric",
    version,
    about = "Concentric-ring star-graph models: exact tables, transforms and estimation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the joint (or leaf-marginal) probability table.
    Tabulate(TabulateArgs),
    /// Print a moment or interaction parametrization.
    Moments(MomentsArgs),
    /// Estimate rho from a count CSV.
    Fit(FitArgs),
    /// Draw a sample and print it as a count CSV.
    Sample(SampleArgs),
    /// Replicated sample-then-EM runs over a grid of rho and n.
    Simulate(SimulateArgs),
    /// Compare leaf-on-root and root-on-leaf dependence measures.
    Reversal(ReversalArgs),
    /// Sample size at which the rarest joint cell expects one count.
    Plan(PlanArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Table,
}

/// Model parameters: the number of leaves and exactly one of rho or alpha.
#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Number of leaves.
    #[arg(long = "Q", value_name = "Q")]
    pub leaves: usize,
    /// Leaf-root correlation in [0, 1).
    #[arg(long, required_unless_present = "alpha", conflicts_with = "alpha")]
    pub rho: Option<f64>,
    /// Odds parameter in [1, inf).
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Round displayed numbers to this many decimals.
    #[arg(long)]
    pub round: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TabulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Sum the root out and print the leaf table.
    #[arg(long)]
    pub marginal: bool,
    /// Add the table multiplied by c_Q (integer alpha only) and the exponents.
    #[arg(long)]
    pub integer: bool,
    /// Multiply probabilities by this factor in the `count` column.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MomentKind {
    Raw,
    Central,
    Loglinear,
    Linear,
    LeafLinear,
    LeafLoglinear,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub kind: MomentKind,
    /// Omit entries that are zero to within 1e-12.
    #[arg(long)]
    pub nonzero: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitMode {
    /// Closed form with the root column observed.
    Observed,
    /// Method of moments on the leaves.
    Mom,
    /// Closed-form latent-root estimate for two or three leaves.
    Closed,
    /// EM on the leaves.
    Em,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Count CSV (`a1,…,aQ[,l],count`).
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub mode: FitMode,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(long = "max-iter", default_value_t = 500)]
    pub max_iter: usize,
    /// EM starting value in (0, 1); defaults to the moment estimate.
    #[arg(long)]
    pub init: Option<f64>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep the root column.
    #[arg(long)]
    pub root: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long = "Q", value_name = "Q", default_value_t = 4)]
    pub leaves: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.6, 0.7, 0.8])]
    pub rho: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [300u64, 1000])]
    pub n: Vec<u64>,
    #[arg(long, default_value_t = 500)]
    pub replicates: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [1e-4, 1e-7])]
    pub tolerance: Vec<f64>,
    #[arg(long = "max-iter", default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 20_240_601)]
    pub seed: u64,
    /// Worker threads; the report does not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Leave per-replicate records out of the report.
    #[arg(long)]
    pub summary_only: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReversalArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long = "Q", value_name = "Q", default_value_t = 2)]
    pub leaves: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}
