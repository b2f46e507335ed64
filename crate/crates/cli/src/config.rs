//! Run configuration: a flat JSON object, overridden by command-line flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use sav_core::harness::default_dt_ladder;
use sav_core::problems::TimeFactor;
use sav_core::tableau::MAX_ORDER;
use sav_core::{BdfTableau, ExactSolution, Field, Grid, ProblemDefinition, StepMode};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Converge,
    Stability,
    Burgers,
    Run,
}

impl Experiment {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "converge" => Ok(Self::Converge),
            "stability" => Ok(Self::Stability),
            "burgers" => Ok(Self::Burgers),
            "run" | "single-run" => Ok(Self::Run),
            other => Err(invalid(
                "experiment",
                format!("unknown experiment `{other}` (allowed: converge, stability, burgers, run)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemId {
    AllenCahn,
    CahnHilliard,
    Burgers,
    LinearDecay,
}

impl ProblemId {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "allen_cahn" | "allen-cahn" | "ac" => Ok(Self::AllenCahn),
            "cahn_hilliard" | "cahn-hilliard" | "ch" => Ok(Self::CahnHilliard),
            "burgers" => Ok(Self::Burgers),
            "linear_decay" | "linear-decay" => Ok(Self::LinearDecay),
            other => Err(invalid(
                "problem",
                format!(
                    "unknown problem `{other}` (allowed: allen_cahn, cahn_hilliard, burgers, linear_decay)"
                ),
            )),
        }
    }

    fn default_grid(self) -> Vec<usize> {
        match self {
            Self::AllenCahn | Self::CahnHilliard => vec![64, 64],
            Self::Burgers => vec![320],
            Self::LinearDecay => vec![1],
        }
    }
}

pub fn parse_mode(s: &str) -> Result<StepMode, ConfigError> {
    match s {
        "sav" => Ok(StepMode::Sav),
        "sav-ubar" | "sav_ubar" => Ok(StepMode::SavUbar),
        "imex" => Ok(StepMode::Imex),
        other => Err(invalid("mode", format!("unknown mode `{other}` (allowed: sav, sav-ubar, imex)"))),
    }
}

/// `64x64`, `64,64` or `320`.
pub fn parse_grid(s: &str) -> Result<Vec<usize>, ConfigError> {
    s.split(['x', 'X', ','])
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| invalid("grid", format!("cannot parse `{s}` as extents like 64x64 or 320")))
        })
        .collect()
}

pub fn parse_dt_list(s: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| invalid("dt_list", format!("cannot parse `{p}` as a number")))
        })
        .collect()
}

/// Contents of a config file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: Option<String>,
    pub problem: Option<String>,
    pub alpha: Option<f64>,
    pub m0: Option<f64>,
    pub nu: Option<f64>,
    pub rate: Option<f64>,
    pub stabilization: Option<f64>,
    pub c_shift: Option<f64>,
    #[serde(alias = "order")]
    pub k: Option<usize>,
    pub eta_exponent: Option<u32>,
    pub dt: Option<f64>,
    pub dt_list: Option<Vec<f64>>,
    pub dt_ref: Option<f64>,
    #[serde(rename = "T")]
    pub t_final: Option<f64>,
    pub steps: Option<usize>,
    pub grid: Option<Vec<usize>>,
    pub mode: Option<String>,
    pub seed: Option<u64>,
    pub manufactured: Option<bool>,
    pub out: Option<PathBuf>,
}

impl RawConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text).map_err(|source| ConfigError::Parse {
            path: path.to_owned(),
            source,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Keys set in `over` replace those in `self`.
    pub fn merge(self, over: RawConfig) -> RawConfig {
        macro_rules! pick {
            ($($f:ident),*) => { RawConfig { $($f: over.$f.or(self.$f)),* } };
        }
        pick!(
            experiment, problem, alpha, m0, nu, rate, stabilization, c_shift, k, eta_exponent, dt,
            dt_list, dt_ref, t_final, steps, grid, mode, seed, manufactured, out
        )
    }
}

/// Physical parameters with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Physics {
    pub alpha: f64,
    pub m0: f64,
    pub nu: f64,
    pub rate: f64,
    pub stabilization: f64,
    pub c_shift: Option<f64>,
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub problem: ProblemId,
    pub physics: Physics,
    pub order: usize,
    pub eta_exponent: Option<u32>,
    pub dt: f64,
    pub dt_list: Vec<f64>,
    pub dt_ref: f64,
    pub t_final: f64,
    pub steps: usize,
    pub grid: Vec<usize>,
    pub mode: StepMode,
    pub seed: u64,
    pub manufactured: bool,
    pub out: PathBuf,
}

fn positive(key: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be a positive number, got {v}")))
    }
}

fn non_negative(key: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be a non-negative number, got {v}")))
    }
}

impl RunConfig {
    pub fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let experiment = match raw.experiment.as_deref() {
            Some(s) => Experiment::parse(s)?,
            None => return Err(invalid("experiment", "missing (allowed: converge, stability, burgers, run)")),
        };
        let problem = match (experiment, raw.problem.as_deref()) {
            (Experiment::Burgers, None | Some("burgers")) => ProblemId::Burgers,
            (Experiment::Burgers, Some(other)) => {
                return Err(invalid("problem", format!("the burgers experiment runs burgers, got `{other}`")))
            }
            (_, Some(s)) => ProblemId::parse(s)?,
            (_, None) => ProblemId::AllenCahn,
        };

        let physics = Physics {
            alpha: positive(
                "alpha",
                raw.alpha.unwrap_or(if problem == ProblemId::CahnHilliard { 0.04 } else { 1e-4 }),
            )?,
            m0: positive("m0", raw.m0.unwrap_or(0.005))?,
            nu: positive("nu", raw.nu.unwrap_or(1.0 / 314.0))?,
            rate: positive("rate", raw.rate.unwrap_or(1.0))?,
            stabilization: non_negative("stabilization", raw.stabilization.unwrap_or(0.0))?,
            c_shift: raw.c_shift.map(|c| non_negative("c_shift", c)).transpose()?,
        };

        let order = raw.k.unwrap_or(2);
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(invalid("k", format!("order must be in 1..={MAX_ORDER}, got {order}")));
        }
        if let Some(p) = raw.eta_exponent {
            if p == 0 {
                return Err(invalid("eta_exponent", "must be at least 1"));
            }
        }

        let grid = raw.grid.unwrap_or_else(|| problem.default_grid());
        let dims = if matches!(problem, ProblemId::AllenCahn | ProblemId::CahnHilliard) { 2 } else { 1 };
        if grid.len() != dims || grid.contains(&0) {
            return Err(invalid(
                "grid",
                format!("{problem:?} needs {dims} positive extent(s), got {grid:?}"),
            ));
        }

        let default_dt = match (experiment, problem) {
            (Experiment::Burgers, _) | (_, ProblemId::Burgers) => 8.5e-3,
            (Experiment::Stability, _) => 0.1,
            _ => 0.01,
        };
        let dt = positive("dt", raw.dt.unwrap_or(default_dt))?;
        let dt_list = raw.dt_list.unwrap_or_else(|| default_dt_ladder(order));
        for &h in &dt_list {
            positive("dt_list", h)?;
        }
        if experiment == Experiment::Converge {
            if dt_list.len() < 3 {
                return Err(invalid("dt_list", format!("needs at least 3 entries, got {}", dt_list.len())));
            }
            if dt_list.windows(2).any(|w| w[1] >= w[0]) {
                return Err(invalid("dt_list", "must be strictly decreasing"));
            }
        }
        let dt_ref = positive("dt_ref", raw.dt_ref.unwrap_or(1e-4))?;
        let t_final = positive("T", raw.t_final.unwrap_or(1.0))?;
        let steps = raw.steps.unwrap_or(200);
        if steps == 0 {
            return Err(invalid("steps", "must be at least 1"));
        }
        let mode = match raw.mode.as_deref() {
            Some(s) => parse_mode(s)?,
            None => StepMode::Sav,
        };
        let manufactured = match (experiment, raw.manufactured) {
            (Experiment::Converge, Some(false)) => {
                return Err(invalid("manufactured", "convergence studies need the manufactured solution"))
            }
            (Experiment::Stability, Some(true)) => {
                return Err(invalid("manufactured", "stability probes run the unforced problem"))
            }
            (Experiment::Converge, _) => true,
            (Experiment::Stability | Experiment::Burgers, _) => false,
            (Experiment::Run, m) => m.unwrap_or(true),
        };

        Ok(RunConfig {
            experiment,
            problem,
            physics,
            order,
            eta_exponent: raw.eta_exponent,
            dt,
            dt_list,
            dt_ref,
            t_final,
            steps,
            grid,
            mode,
            seed: raw.seed.unwrap_or(42),
            manufactured,
            out: raw.out.unwrap_or_else(|| PathBuf::from("out")),
        })
    }

    pub fn tableau(&self) -> Result<BdfTableau, sav_core::Error> {
        let t = BdfTableau::new(self.order)?;
        match self.eta_exponent {
            Some(p) => t.with_eta_exponent(p),
            None => Ok(t),
        }
    }

    pub fn build_grid(&self) -> Result<Grid, sav_core::Error> {
        match self.problem {
            ProblemId::AllenCahn | ProblemId::CahnHilliard => Grid::fourier_2d(self.grid[0], self.grid[1]),
            ProblemId::Burgers | ProblemId::LinearDecay => Grid::sine_1d(self.grid[0]),
        }
    }

    /// The problem, with its manufactured or exact solution attached when
    /// `manufactured` is set.
    pub fn build_problem(&self) -> Result<ProblemDefinition, sav_core::Error> {
        let grid = self.build_grid()?;
        let ph = &self.physics;
        let mut p = match self.problem {
            ProblemId::AllenCahn => ProblemDefinition::allen_cahn(&grid, ph.alpha, ph.stabilization)?,
            ProblemId::CahnHilliard => {
                ProblemDefinition::cahn_hilliard(&grid, ph.alpha, ph.m0, ph.stabilization)?
            }
            ProblemId::Burgers => ProblemDefinition::burgers(&grid, ph.nu)?,
            ProblemId::LinearDecay => ProblemDefinition::linear_decay(&grid, ph.rate)?,
        };
        if let Some(c) = ph.c_shift {
            p = p.with_c_shift(c)?;
        }
        if !self.manufactured {
            return Ok(p);
        }
        match self.problem {
            ProblemId::AllenCahn | ProblemId::CahnHilliard => {
                p.with_manufactured_forcing(ExactSolution::exp_sin_sin(&grid)?)
            }
            ProblemId::Burgers => p.with_manufactured_forcing(ExactSolution::sin_pi_x(&grid)?),
            ProblemId::LinearDecay => {
                let pi = std::f64::consts::PI;
                let profile = Field::from_fn(&grid, |x| (pi * (x[0] + 1.0) / 2.0).sin());
                p.with_exact_solution(ExactSolution::separable(profile, TimeFactor::Exp { rate: ph.rate }))
            }
        }
    }
}
