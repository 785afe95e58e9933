use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

mod commands;
mod config;

/// Waiting-time tail approximations for M/G/1 queues with heavy-tailed service.
#[derive(Parser, Debug)]
#[command(name = "mg1", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one approximation at one point
    Approx(ApproxArgs),
    /// Tabulate the approximations over a grid of x
    Sweep(SweepArgs),
    /// Transition thresholds and the heavy-traffic / heavy-tail crossing
    Threshold(ThresholdArgs),
    /// Monte Carlo estimate of P(W > x)
    Simulate(SimulateArgs),
    /// All approximations against Monte Carlo, with ratio columns
    Compare(CompareArgs),
    /// Geometric random sums of Pareto summands
    Geom(GeomArgs),
}

/// Options shared by every command.
#[derive(Args, Debug)]
struct Common {
    /// File of `key = value` lines; command-line flags take precedence
    #[arg(long, value_name = "PATH")]
    config: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Model literal: pareto-it:alpha=A, exp:rate=R or lattice:file=PATH[,spacing=H]
    #[arg(long, value_name = "MODEL")]
    dist: String,
    /// Traffic intensity in (0, 1)
    #[arg(long)]
    rho: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ApproxMethod {
    /// exp(-(1-rho) x / mu)
    Ht,
    /// rho/(1-rho) P(X > x)
    Tail,
    H,
    J,
    /// H with the geometric term replaced by its CLT correction
    HClt,
    /// Cramer-Lundberg exp(-theta* x)
    Cl,
    /// Corrected heavy-traffic formula, evaluated at the given x
    CorrectedHt,
    /// Geometric-sum approximation with p = 1 - rho unless --p is given
    Geom,
}

#[derive(Args, Debug)]
struct ApproxArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    x: f64,
    #[arg(long, value_enum)]
    method: ApproxMethod,
    /// Success probability for --method geom
    #[arg(long)]
    p: Option<f64>,
    /// Half-width of the transition band around c = 1
    #[arg(long, default_value_t = mg1_core::transition::DEFAULT_BAND)]
    band: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long, default_value_t = 1.0)]
    x_min: f64,
    #[arg(long, default_value_t = 100.0)]
    x_max: f64,
    #[arg(long, default_value_t = 50)]
    points: usize,
    /// Space the grid geometrically
    #[arg(long)]
    log_grid: bool,
}

#[derive(Args, Debug)]
struct SimArgs {
    /// Target relative error of the conditional Monte Carlo estimator
    #[arg(long, default_value_t = 0.05)]
    rel_err: f64,
    /// Replication cap of the conditional Monte Carlo estimator
    #[arg(long, default_value_t = 50_000_000)]
    max_samples: u64,
    /// Random seed (defaults to $MG1_SEED, then 1)
    #[arg(long, env = "MG1_SEED", default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Output file (stdout when omitted)
    #[arg(long, value_name = "PATH")]
    out: Option<std::path::PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,
    /// Add conditional Monte Carlo columns
    #[arg(long)]
    simulate: bool,
    #[command(flatten)]
    sim: SimArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ThresholdArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Scale factor of the threshold
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Also report the traffic intensity whose threshold is this x
    #[arg(long)]
    x: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SimMethod {
    /// Asmussen-Kroese conditional Monte Carlo with a relative-error stop
    Ak,
    /// Crude compound-geometric sampling with a fixed sample count
    Crude,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    x: f64,
    #[arg(long, value_enum, default_value_t = SimMethod::Ak)]
    method: SimMethod,
    /// Sample count for --method crude
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[command(flatten)]
    sim: SimArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CompareFormat {
    Table,
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum, default_value_t = CompareFormat::Table)]
    format: CompareFormat,
    #[command(flatten)]
    sim: SimArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct GeomArgs {
    /// Tail index of the Pareto summands, P(Y > y) = y^-betaY for y >= 1
    #[arg(long = "betaY", value_name = "BETA")]
    beta_y: f64,
    /// Success probability of the geometric count, P(N = k) = p (1-p)^(k-1)
    #[arg(long)]
    p: f64,
    /// Point at which to evaluate the approximation
    #[arg(long)]
    x: Option<f64>,
    /// Scale factor of the threshold
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Crude Monte Carlo samples at --x (0 disables)
    #[arg(long, default_value_t = 0)]
    samples: u64,
    /// Random seed (defaults to $MG1_SEED, then 1)
    #[arg(long, env = "MG1_SEED", default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::inject(&command(), argv) {
        Ok(a) => a,
        Err(e) => return report(e),
    };
    let cli = match command()
        .try_get_matches_from(argv)
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mut out = std::io::stdout().lock();
    let result = match cli.command {
        Command::Approx(a) => commands::approx(a, &mut out),
        Command::Sweep(a) => commands::sweep(a, &mut out),
        Command::Threshold(a) => commands::threshold(a, &mut out),
        Command::Simulate(a) => commands::simulate(a, &mut out),
        Command::Compare(a) => commands::compare(a, &mut out),
        Command::Geom(a) => commands::geom(a, &mut out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e),
    }
}

/// The parser, with every subcommand's flags overriding themselves so that
/// values spliced in from a config file yield to explicit ones.
fn command() -> clap::Command {
    let mut cmd = Cli::command();
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    for n in names {
        cmd = cmd.mut_subcommand(n, |s| s.args_override_self(true));
    }
    cmd
}

fn report(e: commands::CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}
