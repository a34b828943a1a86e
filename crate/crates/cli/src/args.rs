use crate::solve::Method;
use crate::sweep::Axis;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "rmsched", version, about = "Batch scheduling on parallel reconfigurable machines")]
pub struct Cli {
    /// JSON file of default flag values; flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random instance.
    Gen(GenArgs),
    /// Solve an instance.
    Solve(SolveArgs),
    /// Check an instance and optionally a schedule for it.
    Validate(ValidateArgs),
    /// Run several methods over a set of instances.
    Bench(BenchArgs),
    /// Vary one generator parameter and report mean makespan and gap.
    Sweep(SweepArgs),
    /// Render a schedule as an SVG Gantt chart.
    Gantt(GanttArgs),
    /// Write the monolithic MILP in LP format.
    ExportLp(ExportLpArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ShapeArgs {
    #[arg(long, default_value_t = 50)]
    pub orders: usize,
    #[arg(long, default_value_t = 5)]
    pub machines: usize,
    /// Configurations per machine.
    #[arg(long, default_value_t = 5)]
    pub configs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub remanuf_frac: f64,
    #[arg(long, default_value_t = 1.0)]
    pub scale_reconfig: f64,
    #[arg(long, default_value_t = 1.0)]
    pub scale_setup: f64,
    #[arg(long, default_value_t = 1.0)]
    pub scale_area: f64,
    #[arg(long, default_value_t = 1.0)]
    pub scale_opt_variance: f64,
    /// Eligibility probability per (machine, configuration) [default: 0.75].
    #[arg(long)]
    pub eligibility: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MrtArg {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Overall limit in seconds.
    #[arg(long, default_value_t = 600.0)]
    pub time_limit: f64,
    /// Master gap in percent.
    #[arg(long, default_value_t = 1.0)]
    pub mp_gap: f64,
    /// Per-machine subproblem limit in seconds.
    #[arg(long, default_value_t = 60.0)]
    pub sp_time_limit: f64,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Per-iteration master limit in seconds.
    #[arg(long)]
    pub mp_time_limit: Option<f64>,
    #[arg(long, value_enum, default_value_t = MrtArg::Static)]
    pub mrt_mode: MrtArg,
    /// Start LBBD from scratch instead of from the warm start.
    #[arg(long)]
    pub no_warm_start: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Lbbd)]
    pub method: Method,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Schedule output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-iteration CSV log.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub instance: PathBuf,
    pub schedule: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Instance files.
    pub instances: Vec<PathBuf>,
    /// Generate this many instances instead, with seeds counting up from --seed.
    #[arg(long)]
    pub random: Option<usize>,
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Method::Lbbd, Method::Warmstart])]
    pub methods: Vec<Method>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub axis: Axis,
    #[arg(long, value_delimiter = ',', required = true)]
    pub levels: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub replications: usize,
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GanttArgs {
    pub instance: PathBuf,
    pub schedule: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportLpArgs {
    pub instance: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the warm-start solution as variable values.
    #[arg(long, value_name = "FILE")]
    pub mip_start: Option<PathBuf>,
}
