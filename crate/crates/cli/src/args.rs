use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mcv_core::{McvVariant, TargetKind};

#[derive(Debug, Parser)]
#[command(name = "mcv", version, about = "Inference for multivariate coefficients of variation in factorial designs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-group MCV and standardized-mean estimates with one-sample intervals.
    Estimate(EstimateArgs),
    /// Global Wald-type test of H·θ = 0.
    Test(TestArgs),
    /// Max-t multiple contrast test with simultaneous confidence intervals.
    Mct(MctArgs),
    /// Empirical size and power study.
    Simulate(SimulateArgs),
    /// Isometric log-ratio coordinates of compositional data.
    Ilr(IlrArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Rr,
    Vv,
    Vn,
    Az,
    All,
}

impl VariantArg {
    pub fn expand(self) -> Vec<McvVariant> {
        match self {
            VariantArg::Rr => vec![McvVariant::Rr],
            VariantArg::Vv => vec![McvVariant::Vv],
            VariantArg::Vn => vec![McvVariant::Vn],
            VariantArg::Az => vec![McvVariant::Az],
            VariantArg::All => McvVariant::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    C,
    B,
    Both,
}

impl TargetArg {
    pub fn expand(self) -> Vec<TargetKind> {
        match self {
            TargetArg::C => vec![TargetKind::C],
            TargetArg::B => vec![TargetKind::B],
            TargetArg::Both => TargetKind::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestMethodArg {
    Asymptotic,
    Permutation,
    Bootstrap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MctMethodArg {
    Asymptotic,
    Bootstrap,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Data CSV with a `group` column.
    pub file: PathBuf,
    #[arg(long, value_enum, default_value_t = VariantArg::All)]
    pub variant: VariantArg,
    /// One minus the confidence level of the per-group intervals.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// JSON report path (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the per-group table as CSV.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Data CSV with a `group` column.
    pub file: PathBuf,
    #[arg(long, value_enum, default_value_t = VariantArg::Vv)]
    pub variant: VariantArg,
    #[arg(long, value_enum, default_value_t = TargetArg::C)]
    pub target: TargetArg,
    /// `ksample`, `tukey`, `dunnett`, `factorial:<A[:B..]>` or `csv:<path>`.
    #[arg(long)]
    pub contrasts: Option<String>,
    /// Factor layout of the groups, e.g. `2x3` or `A=2,B=3` (last factor varies fastest).
    #[arg(long)]
    pub layout: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Resamples for permutation or bootstrap calibration.
    #[arg(long = "B", default_value_t = 1000)]
    pub resamples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// JSON report path (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[arg(long, value_enum, default_value_t = TestMethodArg::Permutation)]
    pub method: TestMethodArg,
}

#[derive(Debug, Args)]
pub struct MctArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[arg(long, value_enum, default_value_t = MctMethodArg::Bootstrap)]
    pub method: MctMethodArg,
    /// Monte Carlo draws for the asymptotic critical value.
    #[arg(long, default_value_t = 100_000)]
    pub mc_draws: usize,
    /// Also write the contrast table as CSV.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Study file (`key = value` lines).
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in study: paper-size-small, power, nightly or full-grid.
    #[arg(long)]
    pub preset: Option<String>,
    /// Simulate from the group moments of this data file instead of a parametric scenario.
    #[arg(long)]
    pub mimic_data: Option<PathBuf>,
    /// With --mimic-data, give every group the pooled moments.
    #[arg(long, requires = "mimic_data")]
    pub mimic_null: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long = "B")]
    pub resamples: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub mc_draws: Option<usize>,
    /// Tidy CSV path (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON report path.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IlrArgs {
    /// Data CSV of strictly positive parts with a `group` column.
    pub file: PathBuf,
    /// Output CSV path (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}
