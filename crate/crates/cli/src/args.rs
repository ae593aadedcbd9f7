use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Fixed master seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20240917;

#[derive(Debug, Parser)]
#[command(name = "stablegap", version, about = "Spectral gaps and return probabilities for walks with long jumps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Walk gaps over a range of box radii, with the log-log slope.
    GapSweep(GapSweepArgs),
    /// Multiscale certificate plus the empirical Dirichlet-sum ratios.
    Compare(CompareArgs),
    /// Multiscale constants and the certificate for one rate.
    Multiscale(MultiscaleArgs),
    /// Exclusion-process gaps on a grid of (n, ell).
    Exclusion(ParticleArgs),
    /// Zero-range gaps on a grid of (n, ell).
    ZeroRange(ZeroRangeArgs),
    /// Return probability P(x(t) = 0): exact values and Monte Carlo.
    ReturnProb(ReturnProbArgs),
    /// Runs every acceptance criterion and reports pass/fail.
    VerifyAll(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RateName {
    Power,
    Q0,
    Lacunary,
    Nn,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodName {
    Auto,
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExactName {
    /// Fourier inversion on all of Z (closed-form rates only).
    Fourier,
    /// Uniformization on the killed box.
    Box,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct RateArgs {
    #[arg(long, value_enum, default_value = "power")]
    pub rate: RateName,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Lacunary anchors are l^degree.
    #[arg(long, default_value_t = 2)]
    pub anchor_degree: u32,
    /// Two-column `z p(z)` file for `--rate table`.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Power-law tail `scale |z|^{-(1+tail_alpha)}` beyond the table.
    #[arg(long)]
    pub tail_alpha: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub tail_scale: f64,
    /// Scales every rate by this factor.
    #[arg(long, default_value_t = 1.0)]
    pub rate_scale: f64,
}

#[derive(Debug, Clone, Args)]
pub struct GapSweepArgs {
    #[command(flatten)]
    pub rate: RateArgs,
    /// Box radii: `a..b` (inclusive) or a comma list, e.g. `4,8,16`.
    #[arg(long, default_value = "4,8,16,32,64")]
    pub n: String,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: MethodName,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub rate: RateArgs,
    #[arg(long = "K", default_value_t = 2.0)]
    pub k: f64,
    /// Ratios are taken over n ≤ n_max.
    #[arg(long, default_value_t = 10_000)]
    pub n_max: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct MultiscaleArgs {
    #[command(flatten)]
    pub rate: RateArgs,
    #[arg(long = "K", default_value_t = 2.0)]
    pub k: f64,
    /// Scale ratio; the dyadic search picks one when omitted.
    #[arg(long)]
    pub b: Option<f64>,
    /// Certify up to the first scale reaching this value.
    #[arg(long, default_value_t = 10_000_000)]
    pub horizon_value: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ParticleArgs {
    #[command(flatten)]
    pub rate: RateArgs,
    #[arg(long, default_value = "1..3")]
    pub n: String,
    /// Particle counts; every admissible count when omitted.
    #[arg(long)]
    pub ell: Option<String>,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: MethodName,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ZeroRangeArgs {
    #[command(flatten)]
    pub particles: ParticleArgs,
    /// `linear`, `indicator`, or a comma list `g(1),g(2),…` long enough for
    /// the largest particle count.
    #[arg(long, default_value = "linear")]
    pub g: String,
}

#[derive(Debug, Clone, Args)]
pub struct ReturnProbArgs {
    #[command(flatten)]
    pub rate: RateArgs,
    /// Times: a comma list, or `a..b/k` for k log-spaced points in [a, b].
    #[arg(long, default_value = "10,30,100")]
    pub times: String,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Exact reference; Fourier when the rate supports it, else the box.
    #[arg(long, value_enum)]
    pub exact: Option<ExactName>,
    /// Box radius; 2048 for alpha ≥ 1 and 8192 below.
    #[arg(long)]
    pub box_radius: Option<usize>,
    #[arg(long, default_value_t = 1e-6)]
    pub leak_budget: f64,
    /// Alias-table horizon for jump sampling.
    #[arg(long)]
    pub alias_horizon: Option<u64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Criteria to run, e.g. `1..3` or `5,8`; all by default.
    #[arg(long)]
    pub only: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, hide = true)]
    pub inject_asymmetry: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}
