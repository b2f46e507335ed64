//! Dispatches a validated configuration and writes its artifacts.

use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

use sav_core::harness::{
    burgers_compare, convergence_study, mass_probe, random_smooth_field, stability_probe,
    BurgersComparison, MassReport, StabilityReport,
};
use sav_core::par::Execution;
use sav_core::stepper::{run, Divergence, RunOptions, RunReport, RunSummary};
use sav_core::{Field, ProblemDefinition, ProblemKind, StepMode};

use crate::config::{ConfigError, Experiment, RunConfig};
use crate::output::{
    convergence_csv, ensure_dir, snapshot_csv, trace_csv, write_json, write_text, WriteError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ASSERTION: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;

/// Band limit of the random initial data.
pub const RANDOM_MAX_MODE: usize = 8;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Write(#[from] WriteError),
    #[error("{0}")]
    Core(sav_core::Error),
}

impl From<sav_core::Error> for CliError {
    fn from(e: sav_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(sav_core::Error::Divergence { .. }) => EXIT_DIVERGENCE,
            _ => EXIT_USAGE,
        }
    }
}

/// Result of a completed experiment whose artifacts were written.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Success,
    AssertionFailed(String),
    Diverged(String),
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Success => EXIT_OK,
            Outcome::AssertionFailed(_) => EXIT_ASSERTION,
            Outcome::Diverged(_) => EXIT_DIVERGENCE,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub outcome: Outcome,
    pub files: Vec<PathBuf>,
}

pub fn execute(cfg: &RunConfig, exec: Execution) -> Result<Report, CliError> {
    ensure_dir(&cfg.out)?;
    match cfg.experiment {
        Experiment::Converge => converge(cfg, exec),
        Experiment::Stability => stability(cfg),
        Experiment::Burgers => burgers(cfg, exec),
        Experiment::Run => single_run(cfg),
    }
}

#[derive(Serialize)]
struct ConvergenceSummary<'a> {
    slope_l2: Option<f64>,
    slope_h1: Option<f64>,
    slope_h2: Option<f64>,
    problem: &'a str,
    order: usize,
    mode: StepMode,
    t_final: f64,
    diverged_dts: Vec<f64>,
}

fn converge(cfg: &RunConfig, exec: Execution) -> Result<Report, CliError> {
    let problem = cfg.build_problem()?;
    let tableau = cfg.tableau()?;
    let report = convergence_study(&problem, &tableau, cfg.mode, &cfg.dt_list, cfg.t_final, exec)?;

    let finest = *cfg.dt_list.last().expect("validated non-empty");
    let u0 = problem.exact().expect("manufactured").sample(0.0);
    let options = RunOptions {
        tolerate_divergence: true,
        errors_every_step: true,
        ..Default::default()
    };
    let trace = run(&problem, &tableau, finest, cfg.t_final, cfg.mode, u0, &options)?;

    let diverged: Vec<f64> = report.entries.iter().filter(|e| e.diverged).map(|e| e.dt).collect();
    let summary = ConvergenceSummary {
        slope_l2: report.slope_l2,
        slope_h1: report.slope_h1,
        slope_h2: report.slope_h2,
        problem: problem.name(),
        order: report.order,
        mode: cfg.mode,
        t_final: cfg.t_final,
        diverged_dts: diverged.clone(),
    };
    let files = vec![
        write_text(&cfg.out, "convergence.csv", &convergence_csv(&report.entries))?,
        write_json(&cfg.out, "summary.json", &summary)?,
        write_text(&cfg.out, "trace.csv", &trace_csv(&trace.records))?,
    ];
    let outcome = if diverged.is_empty() {
        Outcome::Success
    } else {
        Outcome::Diverged(format!("diverged at dt = {diverged:?}"))
    };
    Ok(Report { outcome, files })
}

/// Unforced initial data: seeded random field, except `-sin(pi x)` for Burgers.
fn initial_data(cfg: &RunConfig, problem: &ProblemDefinition) -> Field {
    let grid = problem.grid();
    match problem.kind() {
        ProblemKind::Burgers { .. } => Field::from_fn(grid, |x| -(std::f64::consts::PI * x[0]).sin()),
        _ => random_smooth_field(grid, RANDOM_MAX_MODE, cfg.seed),
    }
}

#[derive(Serialize)]
struct StabilitySummary {
    passed: bool,
    #[serde(flatten)]
    report: StabilityReport,
    mass: Option<MassReport>,
}

fn stability(cfg: &RunConfig) -> Result<Report, CliError> {
    let problem = cfg.build_problem()?;
    let tableau = cfg.tableau()?;
    let u0 = initial_data(cfg, &problem);
    let (report, trace) = stability_probe(&problem, &tableau, cfg.mode, cfg.dt, cfg.steps, u0.clone())?;
    let mass = match problem.kind() {
        ProblemKind::CahnHilliard { .. } => Some(mass_probe(&problem, &tableau, cfg.dt, cfg.steps, u0)?),
        _ => None,
    };
    let outcome = if let Some(step) = report.divergence_step {
        Outcome::Diverged(format!("diverged at step {step}"))
    } else if !report.passed() {
        Outcome::AssertionFailed(format!(
            "stability violation, first at step {:?}",
            report.first_violation_step
        ))
    } else {
        Outcome::Success
    };
    let summary = StabilitySummary {
        passed: report.passed(),
        report,
        mass,
    };
    let files = vec![
        write_text(&cfg.out, "trace.csv", &trace_csv(&trace.records))?,
        write_json(&cfg.out, "summary.json", &summary)?,
    ];
    Ok(Report { outcome, files })
}

fn burgers(cfg: &RunConfig, exec: Execution) -> Result<Report, CliError> {
    let cmp: BurgersComparison =
        burgers_compare(cfg.physics.nu, cfg.grid[0], cfg.dt, cfg.dt_ref, cfg.t_final, exec)?;
    let mut files = vec![
        write_text(&cfg.out, "snapshot_sav.csv", &snapshot_csv(&cmp.snapshot_sav()))?,
        write_text(&cfg.out, "snapshot_ref.csv", &snapshot_csv(&cmp.snapshot_reference()))?,
    ];
    if let Some(s) = cmp.snapshot_imex() {
        files.push(write_text(&cfg.out, "snapshot_imex.csv", &snapshot_csv(&s))?);
    }
    files.push(write_text(&cfg.out, "trace.csv", &trace_csv(&cmp.sav.records))?);
    files.push(write_json(&cfg.out, "summary.json", &cmp)?);
    Ok(Report {
        outcome: Outcome::Success,
        files,
    })
}

#[derive(Serialize)]
struct RunSummaryFile<'a> {
    problem: &'a str,
    order: usize,
    eta_exponent: u32,
    dt: f64,
    mode: StepMode,
    #[serde(flatten)]
    summary: &'a RunSummary,
    divergence: Option<Divergence>,
}

fn single_run(cfg: &RunConfig) -> Result<Report, CliError> {
    let problem = cfg.build_problem()?;
    let tableau = cfg.tableau()?;
    let u0 = match problem.exact() {
        Some(exact) => exact.sample(0.0),
        None => initial_data(cfg, &problem),
    };
    let options = RunOptions {
        tolerate_divergence: true,
        errors_every_step: problem.exact().is_some(),
        ..Default::default()
    };
    let report: RunReport = run(&problem, &tableau, cfg.dt, cfg.t_final, cfg.mode, u0, &options)?;
    let summary = RunSummaryFile {
        problem: report.problem,
        order: report.order,
        eta_exponent: report.eta_exponent,
        dt: report.dt,
        mode: report.mode,
        summary: &report.summary,
        divergence: report.divergence,
    };
    let files = vec![
        write_text(&cfg.out, "trace.csv", &trace_csv(&report.records))?,
        write_json(&cfg.out, "summary.json", &summary)?,
    ];
    let outcome = match report.divergence {
        Some(d) => Outcome::Diverged(format!("diverged at step {} (t = {})", d.step, d.time)),
        None => Outcome::Success,
    };
    Ok(Report { outcome, files })
}
