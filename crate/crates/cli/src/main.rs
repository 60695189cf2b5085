//! `caplab`: entangling capacities of bipartite gates from the command line.
//!
//! Exit codes: 0 success, 1 a proven inequality failed, 2 usage or parse
//! error, 3 validation error, 4 unsupported dimension.

mod commands;
mod gate_source;
mod report;

use std::f64::consts::FRAC_PI_4;
use std::process::ExitCode;
use std::time::Instant;

use caplab::optimize::OptimizerConfig;
use clap::{Args, Parser, Subcommand};

use commands::Capacity;

pub const THREADS_ENV: &str = "CAPLAB_THREADS";
pub const DEFAULT_STEPS: usize = 32;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(caplab::Error),
}

impl From<caplab::Error> for CliError {
    fn from(e: caplab::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use caplab::Error as E;
        match self {
            CliError::Usage(_) | CliError::Core(E::Parse(_) | E::Io(_)) => 2,
            CliError::Core(E::UnsupportedDimension(_)) => 4,
            CliError::Core(_) => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "caplab", version, about = "Entangling capacities of bipartite unitaries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute selected capacities of a gate.
    Capacity {
        #[command(flatten)]
        gate: GateArg,
        /// Capacities to compute, comma separated.
        #[arg(long, value_enum, value_delimiter = ',', default_value = "e_u_psi")]
        which: Vec<Capacity>,
        #[command(flatten)]
        opt: OptimizerArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Ratio of Delta E_U to E_U^Psi for exp(i alpha Z(x)Z) over a grid of angles.
    Sweep {
        #[arg(long, default_value_t = 0.05)]
        alpha_min: f64,
        #[arg(long, default_value_t = FRAC_PI_4)]
        alpha_max: f64,
        #[arg(long, default_value_t = DEFAULT_STEPS)]
        steps: usize,
        #[command(flatten)]
        opt: OptimizerArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Check the proven relations between the capacities of a gate.
    Verify {
        #[command(flatten)]
        gate: GateArg,
        #[command(flatten)]
        opt: OptimizerArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Canonical form of a two-qubit gate.
    Decompose {
        #[command(flatten)]
        gate: GateArg,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug)]
struct GateArg {
    /// identity, swap, cnot, cz, zz:<alpha> (radians) or a gate file path.
    #[arg(long)]
    gate: String,
}

#[derive(Args, Debug)]
struct OptimizerArgs {
    #[arg(long, default_value_t = OptimizerConfig::default().restarts)]
    restarts: usize,
    #[arg(long, default_value_t = OptimizerConfig::default().tolerance)]
    tol: f64,
    #[arg(long, default_value_t = OptimizerConfig::default().seed)]
    seed: u64,
}

impl OptimizerArgs {
    fn config(&self) -> Result<OptimizerConfig, CliError> {
        let cfg =
            OptimizerConfig { restarts: self.restarts, tolerance: self.tol, seed: self.seed, ..Default::default() };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    #[arg(long)]
    csv: bool,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the worker pool: {e}")))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize") + "\n"
}

fn elapsed_ms(start: Instant) -> u64 {
    start.elapsed().as_millis().try_into().unwrap_or(u64::MAX)
}

/// Runs the command and returns its standard output and exit code.
fn run(cli: Cli) -> Result<(String, u8), CliError> {
    configure_threads()?;
    let start = Instant::now();
    match cli.command {
        Command::Capacity { gate, which, opt, out } => {
            let g = gate_source::resolve(&gate.gate)?;
            let mut report = commands::capacity(&gate.gate, &g, &which, &opt.config()?)?;
            report.wall_time_ms = elapsed_ms(start);
            let text = if out.json {
                to_json(&report)
            } else if out.csv {
                commands::capacity_csv(&report)
            } else {
                report.to_table()
            };
            Ok((text, 0))
        }
        Command::Sweep { alpha_min, alpha_max, steps, opt, out } => {
            let rows = commands::sweep(alpha_min, alpha_max, steps, &opt.config()?)?;
            let text = if out.json {
                to_json(&rows)
            } else if out.csv {
                commands::sweep_csv(&rows)
            } else {
                commands::sweep_table(&rows)
            };
            Ok((text, 0))
        }
        Command::Verify { gate, opt, out } => {
            let g = gate_source::resolve(&gate.gate)?;
            let mut report = commands::verify(&gate.gate, &g, &opt.config()?)?;
            report.wall_time_ms = elapsed_ms(start);
            let text = if out.json {
                to_json(&report)
            } else if out.csv {
                commands::inequality_csv(&report)
            } else {
                report.to_table()
            };
            Ok((text, if report.all_hold() { 0 } else { 1 }))
        }
        Command::Decompose { gate, json } => {
            let g = gate_source::resolve(&gate.gate)?;
            let report = commands::decompose(&gate.gate, &g)?;
            let text = if json { to_json(&report) } else { commands::decompose_table(&report) };
            Ok((text, 0))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((text, code)) => {
            print!("{text}");
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("caplab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
