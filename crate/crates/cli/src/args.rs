use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "floquet-dde",
    version,
    about = "Floquet stability of periodic second-order delay equations"
)]
pub struct Cli {
    /// Worker threads for sweeps (default: logical cores)
    #[arg(long, global = true, env = "FLOQUET_DDE_JOBS")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// State at the end of one period from a given initial state
    Propagate(PropagateArgs),
    /// Monodromy matrix, multipliers and stability verdict at one period
    Monodromy(MonodromyArgs),
    /// Stability over a range of periods, with refined stable intervals
    SweepOmega(SweepOmegaArgs),
    /// Stability over a grid of (a, b) at a fixed period
    SweepPlane(SweepPlaneArgs),
    /// Crossing curves of the constant-delay (autonomous) equation
    DSubdivision(DSubdivisionArgs),
    /// Period-boundary orbit or dense trajectory over several periods
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    /// x'' + a x' + b x(t - tau(t)) = 0
    Damped,
    /// x'' + a x + b x(t - tau(t)) = 0
    Undamped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct EquationArgs {
    /// Closed-form family with the saturating-ramp delay
    #[arg(long, value_enum, conflicts_with = "config", required_unless_present = "config")]
    pub family: Option<FamilyArg>,
    #[arg(long, allow_negative_numbers = true, requires = "family")]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "family")]
    pub b: Option<f64>,
    /// Maximal delay of the ramp
    #[arg(long, requires = "family")]
    pub tau: Option<f64>,
    /// JSON equation file (see the guide for the schema)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NumericArgs {
    /// Force the method-of-steps integrator
    #[arg(long, conflicts_with = "cross_check")]
    pub numeric: bool,
    /// Run closed form and integrator; fail if rho disagrees beyond 1e-6
    #[arg(long)]
    pub cross_check: bool,
    /// Integrator step (default: period / 4096)
    #[arg(long)]
    pub h: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Artifact format (default: from the --output extension, else csv)
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Artifact path, `-` for stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PropagateArgs {
    #[command(flatten)]
    pub equation: EquationArgs,
    /// Period (end time); defaults to the config period
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub x0: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub v0: f64,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct MonodromyArgs {
    #[command(flatten)]
    pub equation: EquationArgs,
    /// Period; defaults to the config period
    #[arg(long)]
    pub omega: Option<f64>,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepOmegaArgs {
    #[command(flatten)]
    pub equation: EquationArgs,
    #[arg(long)]
    pub from: f64,
    #[arg(long)]
    pub to: f64,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    /// Bisection tolerance for interval endpoints
    #[arg(long, default_value_t = floquet_dde::sweep::DEFAULT_REFINE_TOL)]
    pub refine_tol: f64,
    /// Write the `lo,hi` interval table instead of the samples (csv only)
    #[arg(long)]
    pub intervals: bool,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepPlaneArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long)]
    pub tau: f64,
    #[arg(long)]
    pub omega: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub a_from: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub a_to: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub b_from: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub b_to: f64,
    #[arg(long, default_value_t = 41)]
    pub a_points: usize,
    #[arg(long, default_value_t = 41)]
    pub b_points: usize,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DSubdivisionArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long)]
    pub tau: f64,
    /// Crossing frequency range (damped)
    #[arg(long, default_value_t = 0.0)]
    pub mu_from: f64,
    #[arg(long, default_value_t = 20.0)]
    pub mu_to: f64,
    /// Range of a for the b = 0 line (damped) or all lines (undamped)
    #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
    pub a_from: f64,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    pub a_to: f64,
    /// Points per curve
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    /// Highest branch index for the undamped lines
    #[arg(long, default_value_t = 4)]
    pub k_max: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub equation: EquationArgs,
    /// Period; defaults to the config period
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long, default_value_t = floquet_dde::monodromy::DECAY_PERIODS)]
    pub periods: usize,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub x0: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub v0: f64,
    /// Integrator step (default: period / 4096)
    #[arg(long)]
    pub h: Option<f64>,
    /// Emit every integrator node (`t,x,x_prime`) instead of period ends
    #[arg(long)]
    pub trajectory: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}
