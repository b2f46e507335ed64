//! The SAV / IMEX BDF*k* time loop.
//!
//! One SAV step from `(u^n, ..., ubar^n, ..., r^n)`:
//!
//! 1. `(alpha/dt + A) ubar^{n+1} = A_k(u^n)/dt - g[B_k(v^n)] + f(t^{n+1})`,
//!    `v` being `u` or `ubar` depending on [`StepMode`]
//! 2. `r^{n+1} = r^n / (1 + dt K(ubar^{n+1}) / E(ubar^{n+1}))`
//! 3. `xi^{n+1} = r^{n+1} / E(ubar^{n+1})`
//! 4. `u^{n+1} = eta ubar^{n+1}`, `eta = 1 - (1 - xi^{n+1})^p`
//!
//! Step 2 is the positivity-preserving rearrangement of
//! `(r^{n+1} - r^n)/dt = -xi^{n+1} K(ubar^{n+1})`, so `0 <= r^{n+1} <= r^n`
//! for every `dt`. With a forcing `f` the energy law gains the input
//! `(dE/du, f)`, which is added to the right-hand side; without it `r` would
//! keep decaying while the forced energy grows and `xi` would drift away
//! from 1. IMEX mode stops after step 1 (`u = ubar`). See
//! [`StepMode`] for the choice of history in the explicit term.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::problems::ProblemDefinition;
use crate::spectral::{solve_shifted, sobolev_norm, Field};
use crate::tableau::{combine_history, BdfTableau, MAX_ORDER};

/// Substeps per coarse step for the lower-order cascade start.
pub const CASCADE_SUBSTEPS: usize = 8;

/// Relative slack for the monotone-`r` check.
pub const MONOTONE_TOLERANCE: f64 = 1e-14;

/// Scheme variant.
///
/// `Sav` extrapolates the nonlinear term from the corrected levels,
/// `g[B_k(u^n)]`; `SavUbar` uses the uncorrected levels, `g[B_k(ubar^n)]`.
/// Both keep `0 <= r^{n+1} <= r^n` and order `k`, but with `SavUbar` the
/// uncorrected sequence is not bounded: at large steps `ubar` can grow
/// super-exponentially (while `eta -> 0` keeps `u` bounded) until it
/// overflows. `Imex` is the plain IMEX BDF*k* scheme with `eta = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepMode {
    Sav,
    SavUbar,
    Imex,
}

impl StepMode {
    pub fn name(self) -> &'static str {
        match self {
            StepMode::Sav => "sav",
            StepMode::SavUbar => "sav-ubar",
            StepMode::Imex => "imex",
        }
    }

    pub fn is_sav(self) -> bool {
        matches!(self, StepMode::Sav | StepMode::SavUbar)
    }
}

#[derive(Debug, Clone)]
pub struct SavState {
    pub step_index: usize,
    pub time: f64,
    /// Corrected solutions `u^n, u^{n-1}, ...`, most recent first.
    pub u_history: VecDeque<Field>,
    /// Uncorrected solutions `ubar^n, ubar^{n-1}, ...`, most recent first.
    pub ubar_history: VecDeque<Field>,
    pub r: f64,
    pub last_xi: f64,
    pub last_eta: f64,
    /// `E(ubar^n)` and `K(ubar^n)` of the last step (NaN before the first).
    pub last_energy_bar: f64,
    pub last_dissipation_bar: f64,
    capacity: usize,
}

impl SavState {
    /// State at level 0 holding a single history entry.
    pub fn new(u0: Field, r0: f64, capacity: usize) -> Self {
        let mut u_history = VecDeque::with_capacity(capacity + 1);
        u_history.push_front(u0.clone());
        let mut ubar_history = VecDeque::with_capacity(capacity + 1);
        ubar_history.push_front(u0);
        Self {
            step_index: 0,
            time: 0.0,
            u_history,
            ubar_history,
            r: r0,
            last_xi: 1.0,
            last_eta: 1.0,
            last_energy_bar: f64::NAN,
            last_dissipation_bar: f64::NAN,
            capacity: capacity.clamp(1, MAX_ORDER),
        }
    }

    pub fn current(&self) -> &Field {
        &self.u_history[0]
    }

    pub fn current_bar(&self) -> &Field {
        &self.ubar_history[0]
    }

    fn push(&mut self, u: Field, ubar: Field) {
        self.u_history.push_front(u);
        self.ubar_history.push_front(ubar);
        self.u_history.truncate(self.capacity);
        self.ubar_history.truncate(self.capacity);
    }
}

/// Advances `state` by one step of size `dt`.
pub fn step(
    mut state: SavState,
    problem: &ProblemDefinition,
    tableau: &BdfTableau,
    dt: f64,
    mode: StepMode,
) -> Result<SavState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    if state.r < 0.0 {
        return Err(Error::InvariantViolation(format!("negative r = {}", state.r)));
    }
    let t_next = state.time + dt;
    let n_next = state.step_index + 1;
    let diverged = || Error::Divergence {
        step: n_next,
        time: t_next,
    };

    let history = combine_history(tableau.a_weights(), &state.u_history)?;
    let explicit_history = match mode {
        StepMode::SavUbar => &state.ubar_history,
        StepMode::Sav | StepMode::Imex => &state.u_history,
    };
    let extrapolated = combine_history(tableau.b_weights(), explicit_history)?;
    let g = problem.nonlinear(&extrapolated);
    let mut terms = vec![(1.0 / dt, &history), (-1.0, &g)];
    let forcing = problem.forcing(t_next);
    if let Some(f) = &forcing {
        terms.push((1.0, f));
    }
    let rhs = Field::linear_combination(terms)?;
    let ubar = solve_shifted(tableau.alpha() / dt, problem.linear_symbol(), &rhs)?;
    if !ubar.is_finite() {
        return Err(diverged());
    }

    let (u, xi, eta, energy_bar, dissipation_bar) = match mode {
        StepMode::Imex => (ubar.clone(), 1.0, 1.0, f64::NAN, f64::NAN),
        StepMode::Sav | StepMode::SavUbar => {
            let energy = problem.energy(&ubar);
            let dissipation = problem.dissipation(&ubar);
            if !energy.is_finite() || !dissipation.is_finite() {
                return Err(diverged());
            }
            if energy <= 0.0 {
                return Err(Error::InvariantViolation(format!(
                    "non-positive energy {energy} at step {n_next}"
                )));
            }
            let power = if forcing.is_some() {
                problem.forcing_power(&ubar, t_next)
            } else {
                0.0
            };
            let r_next = advance_r(state.r, dt, dissipation, energy, power);
            debug_assert!(power > 0.0 || r_next <= state.r * (1.0 + MONOTONE_TOLERANCE));
            state.r = r_next;
            let xi = r_next / energy;
            let eta = tableau.eta(xi);
            (ubar.scaled(eta), xi, eta, energy, dissipation)
        }
    };

    state.capacity = state.capacity.max(tableau.order());
    state.push(u, ubar);
    state.step_index = n_next;
    state.time = t_next;
    state.last_xi = xi;
    state.last_eta = eta;
    state.last_energy_bar = energy_bar;
    state.last_dissipation_bar = dissipation_bar;
    Ok(state)
}

/// `r^{n+1} = (r^n + dt P) / (1 + dt K / E)`, clamped at zero. `P` is the
/// forcing power `(dE/du, f)`, zero for unforced problems, where the update
/// reduces to the contraction `r^{n+1} <= r^n`.
fn advance_r(r: f64, dt: f64, dissipation: f64, energy: f64, power: f64) -> f64 {
    ((r + dt * power) / (1.0 + dt * dissipation / energy)).max(0.0)
}

/// Diagnostics of one level produced during start-up.
#[derive(Debug, Clone, Copy)]
struct LevelInfo {
    r: f64,
    xi: f64,
    eta: f64,
}

/// Builds the `k` starting levels `u^0..u^{k-1}`.
///
/// With an exact solution attached the missing levels are exact samples and
/// `r` is advanced along them with the same update as step 2. Otherwise a
/// cascade is used: coarse level `i` comes from [`CASCADE_SUBSTEPS`] substeps
/// of the order-`i` scheme at `dt / CASCADE_SUBSTEPS`.
pub fn initialize(
    problem: &ProblemDefinition,
    tableau: &BdfTableau,
    dt: f64,
    u0: Field,
    r_init: Option<f64>,
    mode: StepMode,
) -> Result<SavState> {
    initialize_traced(problem, tableau, dt, u0, r_init, mode).map(|(s, _)| s)
}

fn initialize_traced(
    problem: &ProblemDefinition,
    tableau: &BdfTableau,
    dt: f64,
    u0: Field,
    r_init: Option<f64>,
    mode: StepMode,
) -> Result<(SavState, Vec<LevelInfo>)> {
    if u0.grid() != problem.grid() {
        return Err(Error::GridMismatch);
    }
    let k = tableau.order();
    let r0 = match r_init {
        Some(r) if r >= 0.0 => r,
        Some(r) => return Err(Error::InvalidArgument(format!("initial r must be >= 0, got {r}"))),
        None => problem.energy(&u0),
    };
    let mut levels = vec![LevelInfo {
        r: r0,
        xi: 1.0,
        eta: 1.0,
    }];
    let mut state = SavState::new(u0, r0, k);
    if k == 1 {
        return Ok((state, levels));
    }

    if let Some(exact) = problem.exact() {
        for i in 1..k {
            let t = i as f64 * dt;
            let ui = exact.sample(t);
            let mut xi = 1.0;
            if mode.is_sav() {
                let energy = problem.energy(&ui);
                let power = problem.forcing_power(&ui, t);
                state.r = advance_r(state.r, dt, problem.dissipation(&ui), energy, power);
                xi = state.r / energy;
            }
            state.push(ui.clone(), ui);
            state.step_index = i;
            state.time = t;
            levels.push(LevelInfo {
                r: state.r,
                xi,
                eta: 1.0,
            });
        }
        return Ok((state, levels));
    }

    let h = dt / CASCADE_SUBSTEPS as f64;
    let mut fine = state.clone();
    fine.capacity = k;
    let mut coarse_u = vec![state.u_history[0].clone()];
    let mut coarse_ubar = vec![state.ubar_history[0].clone()];
    for level in 1..k {
        let sub_tableau = BdfTableau::new(level)?;
        for _ in 0..CASCADE_SUBSTEPS {
            let order = level.min(fine.u_history.len());
            let tab = if order == level {
                sub_tableau.clone()
            } else {
                BdfTableau::new(order)?
            };
            fine = step(fine, problem, &tab, h, mode)?;
        }
        coarse_u.push(fine.u_history[0].clone());
        coarse_ubar.push(fine.ubar_history[0].clone());
        levels.push(LevelInfo {
            r: fine.r,
            xi: fine.last_xi,
            eta: fine.last_eta,
        });
    }
    state.u_history = coarse_u.into_iter().rev().collect();
    state.ubar_history = coarse_ubar.into_iter().rev().collect();
    state.r = fine.r;
    state.last_xi = fine.last_xi;
    state.last_eta = fine.last_eta;
    state.step_index = k - 1;
    state.time = (k - 1) as f64 * dt;
    Ok((state, levels))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorNorms {
    pub l2: f64,
    pub h1: f64,
    pub h2: f64,
}

impl ErrorNorms {
    pub fn between(u: &Field, reference: &Field) -> Result<Self> {
        let e = Field::linear_combination([(1.0, u), (-1.0, reference)])?;
        Ok(Self {
            l2: sobolev_norm(&e, 0.0),
            h1: sobolev_norm(&e, 1.0),
            h2: sobolev_norm(&e, 2.0),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub r: f64,
    pub xi: f64,
    pub eta: f64,
    /// `E(u^n)`.
    pub energy: f64,
    pub principal_norm_sq: f64,
    pub errors: Option<ErrorNorms>,
    /// `r^n - E(u*(t^n))` when an exact solution is known.
    pub s: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub steps: usize,
    pub final_time: f64,
    pub r_initial: f64,
    pub r_final: f64,
    pub max_abs_one_minus_xi: f64,
    pub min_eta: f64,
    pub max_eta: f64,
    pub max_abs_one_minus_eta: f64,
    /// Count of steps with `r^{n+1} > r^n (1 + 1e-14)`.
    pub monotonicity_violations: usize,
    pub negative_r: usize,
    pub negative_xi: usize,
    pub max_principal_norm_sq: f64,
    /// `M_k^2` from the initial `r` (when the energy floor allows it).
    pub principal_bound_sq: Option<f64>,
    pub final_errors: Option<ErrorNorms>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Divergence {
    pub step: usize,
    pub time: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub problem: &'static str,
    pub order: usize,
    pub eta_exponent: u32,
    pub dt: f64,
    pub mode: StepMode,
    pub records: Vec<StepRecord>,
    pub summary: RunSummary,
    pub divergence: Option<Divergence>,
    /// Last computed `u` (the last finite level when the run diverged).
    pub final_u: Field,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides `r^0 = E(u^0)`.
    pub r_init: Option<f64>,
    /// Return a report flagged with the failing step instead of an error.
    pub tolerate_divergence: bool,
    /// Compute error norms against the exact solution at every step (they
    /// are always computed at the final step).
    pub errors_every_step: bool,
}

/// Number of steps of size `dt` covering `[0, t_final]`.
pub fn step_count(dt: f64, t_final: f64) -> Result<usize> {
    if !(dt > 0.0 && t_final > 0.0 && dt.is_finite() && t_final.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need dt > 0 and T > 0 (dt = {dt}, T = {t_final})"
        )));
    }
    let n = (t_final / dt).round();
    if n < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "T = {t_final} is shorter than one step dt = {dt}"
        )));
    }
    if (n * dt - t_final).abs() > 1e-9 * t_final {
        return Err(Error::InvalidArgument(format!(
            "T = {t_final} is not an integer multiple of dt = {dt}"
        )));
    }
    Ok(n as usize)
}

struct Recorder<'a> {
    problem: &'a ProblemDefinition,
    every_step_errors: bool,
    records: Vec<StepRecord>,
}

impl Recorder<'_> {
    fn record(&mut self, step: usize, t: f64, u: &Field, info: LevelInfo, last: bool) -> Result<()> {
        let exact = self.problem.exact().map(|e| e.sample(t));
        let errors = match &exact {
            Some(ue) if self.every_step_errors || last => Some(ErrorNorms::between(u, ue)?),
            _ => None,
        };
        self.records.push(StepRecord {
            step,
            t,
            r: info.r,
            xi: info.xi,
            eta: info.eta,
            energy: self.problem.energy(u),
            principal_norm_sq: self.problem.principal_norm_sq(u),
            errors,
            s: exact.map(|ue| info.r - self.problem.energy(&ue)),
        });
        Ok(())
    }
}

/// Integrates from `u0` at `t = 0` to `t_final` with constant `dt`.
pub fn run(
    problem: &ProblemDefinition,
    tableau: &BdfTableau,
    dt: f64,
    t_final: f64,
    mode: StepMode,
    u0: Field,
    options: &RunOptions,
) -> Result<RunReport> {
    run_observed(problem, tableau, dt, t_final, mode, u0, options, |_, _| {})
}

/// [`run`] with a callback invoked on every recorded level `(record, u^n)`.
#[allow(clippy::too_many_arguments)]
pub fn run_observed(
    problem: &ProblemDefinition,
    tableau: &BdfTableau,
    dt: f64,
    t_final: f64,
    mode: StepMode,
    u0: Field,
    options: &RunOptions,
    mut observe: impl FnMut(&StepRecord, &Field),
) -> Result<RunReport> {
    let n_steps = step_count(dt, t_final)?;
    let k = tableau.order();
    if n_steps + 1 < k {
        return Err(Error::InvalidArgument(format!(
            "{n_steps} steps cannot accommodate the {k} start-up levels"
        )));
    }
    let mut divergence = None;
    let (mut state, levels) =
        match initialize_traced(problem, tableau, dt, u0.clone(), options.r_init, mode) {
            Ok(init) => init,
            Err(Error::Divergence { step, time }) if options.tolerate_divergence => {
                divergence = Some(Divergence { step, time });
                let r0 = options.r_init.unwrap_or_else(|| problem.energy(&u0));
                let info = LevelInfo {
                    r: r0,
                    xi: 1.0,
                    eta: 1.0,
                };
                (SavState::new(u0, r0, k), vec![info])
            }
            Err(e) => return Err(e),
        };
    let mut rec = Recorder {
        problem,
        every_step_errors: options.errors_every_step,
        records: Vec::with_capacity(n_steps + 1),
    };
    let start = levels.len() - 1;
    for (i, info) in levels.iter().enumerate() {
        let u = &state.u_history[start - i];
        rec.record(i, i as f64 * dt, u, *info, i == n_steps)?;
        observe(rec.records.last().expect("just recorded"), u);
    }

    while divergence.is_none() && state.step_index < n_steps {
        let previous = state.clone();
        match step(state, problem, tableau, dt, mode) {
            Ok(mut next) => {
                next.time = next.step_index as f64 * dt;
                let info = LevelInfo {
                    r: next.r,
                    xi: next.last_xi,
                    eta: next.last_eta,
                };
                rec.record(next.step_index, next.time, next.current(), info, next.step_index == n_steps)?;
                observe(rec.records.last().expect("just recorded"), next.current());
                state = next;
            }
            Err(Error::Divergence { step, time }) => {
                if !options.tolerate_divergence {
                    return Err(Error::Divergence { step, time });
                }
                divergence = Some(Divergence { step, time });
                state = previous;
                break;
            }
            Err(e) => return Err(e),
        }
    }

    let records = rec.records;
    let summary = summarize(problem, tableau, mode, &records);
    Ok(RunReport {
        problem: problem.name(),
        order: k,
        eta_exponent: tableau.eta_exponent(),
        dt,
        mode,
        summary,
        divergence,
        final_u: state.u_history[0].clone(),
        records,
    })
}

fn summarize(
    problem: &ProblemDefinition,
    tableau: &BdfTableau,
    mode: StepMode,
    records: &[StepRecord],
) -> RunSummary {
    let first = &records[0];
    let last = records.last().expect("at least the initial record");
    let mut s = RunSummary {
        steps: last.step,
        final_time: last.t,
        r_initial: first.r,
        r_final: last.r,
        max_abs_one_minus_xi: 0.0,
        min_eta: f64::INFINITY,
        max_eta: f64::NEG_INFINITY,
        max_abs_one_minus_eta: 0.0,
        monotonicity_violations: 0,
        negative_r: 0,
        negative_xi: 0,
        max_principal_norm_sq: 0.0,
        principal_bound_sq: if mode.is_sav() {
            problem.principal_bound_sq(first.r, tableau.eta_exponent())
        } else {
            None
        },
        final_errors: last.errors,
    };
    for (i, rec) in records.iter().enumerate() {
        s.max_principal_norm_sq = s.max_principal_norm_sq.max(rec.principal_norm_sq);
        s.negative_r += usize::from(rec.r < 0.0);
        s.negative_xi += usize::from(rec.xi < 0.0);
        if i == 0 {
            continue;
        }
        s.max_abs_one_minus_xi = s.max_abs_one_minus_xi.max((1.0 - rec.xi).abs());
        s.min_eta = s.min_eta.min(rec.eta);
        s.max_eta = s.max_eta.max(rec.eta);
        s.max_abs_one_minus_eta = s.max_abs_one_minus_eta.max((1.0 - rec.eta).abs());
        if mode.is_sav() && rec.r > records[i - 1].r * (1.0 + MONOTONE_TOLERANCE) {
            s.monotonicity_violations += 1;
        }
    }
    if records.len() == 1 {
        s.min_eta = 1.0;
        s.max_eta = 1.0;
    }
    s
}
