//! `sav` command-line driver: convergence studies, large-step stability
//! probes, the Burgers SAV/IMEX comparison and single runs.
//!
//! Exit codes: 0 success, 1 I/O or configuration error, 2 failed stability
//! assertion, 3 divergence in an experiment that does not tolerate it.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use sav_core::par::{with_threads, Execution};

pub mod config;
pub mod execute;
pub mod output;

pub use config::{ConfigError, RawConfig, RunConfig};
pub use execute::{execute, CliError, Outcome, Report};
use execute::EXIT_USAGE;

/// Caps the number of parallel cases.
pub const THREADS_ENV: &str = "SAV_THREADS";

#[derive(Debug, Parser)]
#[command(name = "sav", version, about = "SAV/BDFk experiments for dissipative PDEs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Observed order of the final-time error over a step ladder.
    Converge(Flags),
    /// Large-step invariants from seeded random data (unforced).
    Stability(Flags),
    /// Order-2 SAV vs IMEX on viscous Burgers against a fine reference.
    Burgers(Flags),
    /// One run with a per-step trace.
    Run(Flags),
}

impl Command {
    fn parts(&self) -> (&'static str, &Flags) {
        match self {
            Command::Converge(f) => ("converge", f),
            Command::Stability(f) => ("stability", f),
            Command::Burgers(f) => ("burgers", f),
            Command::Run(f) => ("run", f),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Flat JSON config; flags override its keys.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// allen_cahn, cahn_hilliard, burgers or linear_decay.
    #[arg(long)]
    pub problem: Option<String>,
    /// BDF order k in 1..=5.
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Comma-separated, strictly decreasing.
    #[arg(long = "dt-list", value_name = "DT,DT,...")]
    pub dt_list: Option<String>,
    /// Final time.
    #[arg(long = "T", value_name = "T")]
    pub t_final: Option<f64>,
    /// Extents, e.g. 64x64 or 320.
    #[arg(long)]
    pub grid: Option<String>,
    /// sav, sav-ubar or imex.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long = "eta-exponent")]
    pub eta_exponent: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

impl Flags {
    fn to_raw(&self, experiment: &str) -> Result<RawConfig, ConfigError> {
        Ok(RawConfig {
            experiment: Some(experiment.to_owned()),
            problem: self.problem.clone(),
            k: self.order,
            eta_exponent: self.eta_exponent,
            dt: self.dt,
            dt_list: self.dt_list.as_deref().map(config::parse_dt_list).transpose()?,
            t_final: self.t_final,
            grid: self.grid.as_deref().map(config::parse_grid).transpose()?,
            mode: self.mode.clone(),
            seed: self.seed,
            out: self.out.clone(),
            ..Default::default()
        })
    }
}

/// Config file merged with flags; the subcommand names the experiment.
pub fn resolve(command: &Command) -> Result<RunConfig, ConfigError> {
    let (experiment, flags) = command.parts();
    let file = match &flags.config {
        Some(path) => RawConfig::from_file(path)?,
        None => RawConfig::default(),
    };
    RunConfig::from_raw(file.merge(flags.to_raw(experiment)?))
}

fn thread_cap() -> Result<Option<usize>, ConfigError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(ConfigError::Invalid {
                key: "SAV_THREADS",
                message: format!("expected a positive integer, got `{v}`"),
            }),
        },
        Err(_) => Ok(None),
    }
}

/// Parses `args`, runs the experiment and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let prepared = resolve(&cli.command).and_then(|cfg| Ok((cfg, thread_cap()?)));
    let (cfg, threads) = match prepared {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match with_threads(threads, || execute(&cfg, Execution::Parallel)) {
        Ok(report) => {
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            match &report.outcome {
                Outcome::Success => {}
                Outcome::AssertionFailed(msg) | Outcome::Diverged(msg) => eprintln!("error: {msg}"),
            }
            report.outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
