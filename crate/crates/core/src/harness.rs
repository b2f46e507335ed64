//! Experiment drivers: convergence studies, large-step stability probes and
//! the Burgers SAV-versus-IMEX comparison.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::par::Execution;
use crate::problems::{ProblemDefinition, ProblemKind};
use crate::spectral::{Basis, Field, Grid};
use crate::stepper::{
    initialize, run, step, step_count, RunOptions, RunReport, SavState, StepMode, MONOTONE_TOLERANCE,
};
use crate::tableau::{combine_history, BdfTableau};

/// Errors at or below this level are treated as round-off and left out of fits.
pub const ROUNDING_FLOOR: f64 = 1e-11;

/// Multiple of the early-run maximum that `(L u, u)` may not exceed.
pub const PRINCIPAL_GROWTH_FACTOR: f64 = 10.0;

/// Steps whose maximum of `(L u, u)` sets the growth baseline.
pub const PRINCIPAL_BASELINE_STEPS: usize = 10;

/// Least-squares slope of `log err` against `log dt`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(dt, e)| dt.is_finite() && e.is_finite() && *dt > 0.0 && *e > 0.0)
        .map(|(dt, e)| (dt.ln(), e.ln()))
        .collect();
    if usable.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least two finite positive points, got {}",
            usable.len()
        )));
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 1e-300 {
        return Err(Error::DegenerateFit("step sizes are not distinct".into()));
    }
    Ok(sxy / sxx)
}

/// Default step ladder for order `k` (halving sequence ending at the finest step).
pub fn default_dt_ladder(order: usize) -> Vec<f64> {
    if order <= 3 {
        [40.0, 80.0, 160.0, 320.0, 640.0].iter().map(|n| 1.0 / n).collect()
    } else {
        [10.0, 20.0, 40.0, 80.0].iter().map(|n| 1.0 / n).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceEntry {
    pub dt: f64,
    pub err_l2: f64,
    pub err_h1: f64,
    pub err_h2: f64,
    /// `max_n |1 - xi^n|` over the run.
    pub max_abs_one_minus_xi: f64,
    pub max_abs_one_minus_eta: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub problem: String,
    pub order: usize,
    pub eta_exponent: u32,
    pub mode: StepMode,
    pub t_final: f64,
    pub entries: Vec<ConvergenceEntry>,
    pub slope_l2: Option<f64>,
    pub slope_h1: Option<f64>,
    pub slope_h2: Option<f64>,
}

impl ConvergenceReport {
    pub fn dts(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.dt).collect()
    }

    pub fn any_diverged(&self) -> bool {
        self.entries.iter().any(|e| e.diverged)
    }
}

fn fit_above_floor(points: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.filter(|(_, e)| *e > ROUNDING_FLOOR).collect();
    fit_rate(&pts).ok()
}

/// Runs the order-`k` scheme to `t_final` for each step size and fits the
/// observed rate of the final-time error in L2, H1 and H2.
pub fn convergence_study(
    problem: &ProblemDefinition,
    tableau: &BdfTableau,
    mode: StepMode,
    dt_list: &[f64],
    t_final: f64,
    exec: Execution,
) -> Result<ConvergenceReport> {
    let exact = problem
        .exact()
        .ok_or_else(|| Error::MissingExactSolution(problem.name().into()))?;
    if dt_list.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "a convergence study needs at least 3 step sizes, got {}",
            dt_list.len()
        )));
    }
    if dt_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("step sizes must be strictly decreasing".into()));
    }
    for &dt in dt_list {
        step_count(dt, t_final)?;
    }

    let u0 = exact.sample(0.0);
    let options = RunOptions {
        tolerate_divergence: true,
        ..Default::default()
    };
    let results = exec.map(dt_list, |&dt| {
        run(problem, tableau, dt, t_final, mode, u0.clone(), &options)
    });

    let mut entries = Vec::with_capacity(dt_list.len());
    for (dt, res) in dt_list.iter().zip(results) {
        let report = res?;
        let diverged = report.divergence.is_some();
        let errs = report.summary.final_errors.filter(|_| !diverged);
        entries.push(ConvergenceEntry {
            dt: *dt,
            err_l2: errs.map_or(f64::NAN, |e| e.l2),
            err_h1: errs.map_or(f64::NAN, |e| e.h1),
            err_h2: errs.map_or(f64::NAN, |e| e.h2),
            max_abs_one_minus_xi: report.summary.max_abs_one_minus_xi,
            max_abs_one_minus_eta: report.summary.max_abs_one_minus_eta,
            diverged,
        });
    }
    let slope = |pick: fn(&ConvergenceEntry) -> f64| {
        fit_above_floor(entries.iter().filter(|e| !e.diverged).map(|e| (e.dt, pick(e))))
    };
    Ok(ConvergenceReport {
        problem: problem.name().into(),
        order: tableau.order(),
        eta_exponent: tableau.eta_exponent(),
        mode,
        t_final,
        slope_l2: slope(|e| e.err_l2),
        slope_h1: slope(|e| e.err_h1),
        slope_h2: slope(|e| e.err_h2),
        entries,
    })
}

/// Band-limited random field: modes with `|n| <= max_mode` in every direction
/// get independent standard normal coefficients (Hermitian-symmetrized on
/// periodic grids), everything else is zero. The result is rescaled to unit
/// root-mean-square value.
pub fn random_smooth_field(grid: &Grid, max_mode: usize, seed: u64) -> Field {
    let raw = random_coefficients(grid, max_mode, seed);
    let rms = (raw.physical().iter().map(|v| v * v).sum::<f64>() / grid.len() as f64).sqrt();
    if rms > 0.0 {
        raw.scaled(1.0 / rms)
    } else {
        raw
    }
}

fn random_coefficients(grid: &Grid, max_mode: usize, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    match grid.basis() {
        Basis::Fourier2D => {
            let (nx, ny) = (grid.extents()[0], grid.extents()[1]);
            let m = max_mode as i64;
            let wrap = |i: i64, n: usize| i.rem_euclid(n as i64) as usize;
            let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
            for iy in -m..=m {
                for ix in -m..=m {
                    let c = Complex64::new(normal(), normal());
                    let a = wrap(iy, ny) * nx + wrap(ix, nx);
                    let b = wrap(-iy, ny) * nx + wrap(-ix, nx);
                    // Average with the mirror mode so the field is real.
                    coeffs[a] += 0.5 * c;
                    coeffs[b] += 0.5 * c.conj();
                }
            }
            Field::from_spectral(grid, coeffs).transformed()
        }
        Basis::Sine1D => {
            let coeffs = (1..=grid.len())
                .map(|j| {
                    let v = normal();
                    Complex64::new(if j <= max_mode { v } else { 0.0 }, 0.0)
                })
                .collect();
            Field::from_spectral(grid, coeffs).transformed()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub problem: String,
    pub order: usize,
    pub dt: f64,
    pub steps: usize,
    /// `#(r^{n+1} > r^n (1 + 1e-14))`.
    pub monotonicity_violations: usize,
    pub negative_r: usize,
    pub negative_xi: usize,
    /// Largest `(L u^n, u^n)` over the first [`PRINCIPAL_BASELINE_STEPS`] steps.
    pub principal_baseline: f64,
    pub principal_sup: f64,
    /// Steps where `(L u^n, u^n)` exceeded the growth cap.
    pub principal_growth_violations: usize,
    pub principal_bound_sq: Option<f64>,
    pub principal_bound_violations: usize,
    /// `max_n |mean(u^n) - mean(u^0)|`.
    pub mean_drift: f64,
    pub first_violation_step: Option<usize>,
    pub divergence_step: Option<usize>,
}

impl StabilityReport {
    pub fn passed(&self) -> bool {
        self.monotonicity_violations == 0
            && self.negative_r == 0
            && self.negative_xi == 0
            && self.principal_growth_violations == 0
            && self.principal_bound_violations == 0
            && self.divergence_step.is_none()
    }
}

/// Runs `n_steps` of the SAV scheme at a large step and checks the
/// unconditional-stability statements along the trajectory.
pub fn stability_probe(
    problem: &ProblemDefinition,
    tableau: &BdfTableau,
    mode: StepMode,
    dt: f64,
    n_steps: usize,
    u0: Field,
) -> Result<(StabilityReport, RunReport)> {
    if problem.is_forced() {
        return Err(Error::InvalidArgument(
            "stability probes require an unforced problem".into(),
        ));
    }
    if n_steps == 0 {
        return Err(Error::InvalidArgument("need at least one step".into()));
    }
    if !mode.is_sav() {
        return Err(Error::InvalidArgument("stability probes need a SAV mode".into()));
    }
    let mean0 = u0.mean();
    let options = RunOptions {
        tolerate_divergence: true,
        ..Default::default()
    };
    let mut means = Vec::with_capacity(n_steps + 1);
    let report = crate::stepper::run_observed(
        problem,
        tableau,
        dt,
        dt * n_steps as f64,
        mode,
        u0,
        &options,
        |_, u| means.push(u.mean()),
    )?;

    let recs = &report.records;
    let baseline = recs
        .iter()
        .take(PRINCIPAL_BASELINE_STEPS + 1)
        .map(|r| r.principal_norm_sq)
        .fold(0.0, f64::max);
    let cap = PRINCIPAL_GROWTH_FACTOR * baseline;
    let bound = report.summary.principal_bound_sq;

    let mut first_violation = None;
    let mut mark = |step: usize, bad: bool| {
        if bad && first_violation.is_none() {
            first_violation = Some(step);
        }
        usize::from(bad)
    };
    let mut growth = 0;
    let mut bound_violations = 0;
    let mut monotone = 0;
    let mut negative_r = 0;
    let mut negative_xi = 0;
    for (i, rec) in recs.iter().enumerate() {
        negative_r += mark(rec.step, rec.r < 0.0);
        negative_xi += mark(rec.step, rec.xi < 0.0);
        growth += mark(rec.step, rec.principal_norm_sq > cap);
        if let Some(b) = bound {
            bound_violations += mark(rec.step, rec.principal_norm_sq > b);
        }
        if i > 0 {
            monotone += mark(rec.step, rec.r > recs[i - 1].r * (1.0 + MONOTONE_TOLERANCE));
        }
    }
    let mean_drift = means.iter().map(|m| (m - mean0).abs()).fold(0.0, f64::max);

    Ok((
        StabilityReport {
            problem: problem.name().into(),
            order: tableau.order(),
            dt,
            steps: report.summary.steps,
            monotonicity_violations: monotone,
            negative_r,
            negative_xi,
            principal_baseline: baseline,
            principal_sup: report.summary.max_principal_norm_sq,
            principal_growth_violations: growth,
            principal_bound_sq: bound,
            principal_bound_violations: bound_violations,
            mean_drift,
            first_violation_step: first_violation,
            divergence_step: report.divergence.map(|d| d.step),
        },
        report,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct MassReport {
    pub steps: usize,
    /// `sum_n |mean(ubar^{n+1}) - mean(A_k(u^n)) / alpha_k|` over the BDF*k*
    /// steps: mean change not accounted for by the BDF history and `eta`.
    pub cumulative_defect: f64,
    pub max_defect: f64,
    /// `max_n |mean(u^n) - mean(u^0)|`, which includes the `eta` rescaling.
    pub raw_mean_drift: f64,
    pub divergence_step: Option<usize>,
}

/// Tracks the discrete mass identity of a periodic Cahn-Hilliard run:
/// the zero mode of the linear operator and of the nonlinear term vanish, so
/// the mean of every uncorrected level is the BDF combination of the
/// previous means divided by `alpha_k`.
pub fn mass_probe(
    problem: &ProblemDefinition,
    tableau: &BdfTableau,
    dt: f64,
    n_steps: usize,
    u0: Field,
) -> Result<MassReport> {
    if !matches!(problem.kind(), ProblemKind::CahnHilliard { .. }) {
        return Err(Error::InvalidArgument(format!(
            "mass probe needs a Cahn-Hilliard problem, got {}",
            problem.name()
        )));
    }
    if problem.is_forced() {
        return Err(Error::InvalidArgument("mass probe requires an unforced problem".into()));
    }
    let mean0 = u0.mean();
    let mut report = MassReport {
        steps: 0,
        cumulative_defect: 0.0,
        max_defect: 0.0,
        raw_mean_drift: 0.0,
        divergence_step: None,
    };
    let mut state = match initialize(problem, tableau, dt, u0, None, StepMode::Sav) {
        Ok(s) => s,
        Err(Error::Divergence { step, .. }) => {
            report.divergence_step = Some(step);
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    let track = |report: &mut MassReport, state: &SavState| {
        let drift = (state.current().mean() - mean0).abs();
        report.raw_mean_drift = report.raw_mean_drift.max(drift);
        report.steps = state.step_index;
    };
    for u in &state.u_history {
        let drift = (u.mean() - mean0).abs();
        report.raw_mean_drift = report.raw_mean_drift.max(drift);
    }
    report.steps = state.step_index;
    while state.step_index < n_steps {
        let predicted = combine_history(tableau.a_weights(), &state.u_history)?.mean() / tableau.alpha();
        state = match step(state, problem, tableau, dt, StepMode::Sav) {
            Ok(s) => s,
            Err(Error::Divergence { step, .. }) => {
                report.divergence_step = Some(step);
                return Ok(report);
            }
            Err(e) => return Err(e),
        };
        let defect = (state.current_bar().mean() - predicted).abs();
        report.cumulative_defect += defect;
        report.max_defect = report.max_defect.max(defect);
        track(&mut report, &state);
    }
    Ok(report)
}

/// Physical-space samples of a 1D solution.
#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

impl Snapshot {
    fn of(u: &Field) -> Self {
        Self {
            x: u.grid().coordinates(0),
            u: u.physical().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BurgersComparison {
    pub nu: f64,
    pub n: usize,
    pub dt: f64,
    pub dt_ref: f64,
    /// Requested horizon.
    pub t_requested: f64,
    /// Horizon actually reached: `ceil(T / dt)` steps of `dt`.
    pub t_final: f64,
    pub steps: usize,
    pub ref_steps: usize,
    pub ref_max_abs: f64,
    pub sav_max_abs: f64,
    /// `max|u_sav - u_ref|`.
    pub sav_deviation: f64,
    /// `max|u_sav| / max|u_ref| - 1`.
    pub sav_overshoot: f64,
    pub imex_max_abs: Option<f64>,
    pub imex_deviation: Option<f64>,
    pub imex_overshoot: Option<f64>,
    pub imex_divergence_step: Option<usize>,
    /// `eta^n` of the SAV run, `n = 0..=steps`.
    pub eta_trace: Vec<f64>,
    #[serde(skip)]
    pub sav: RunReport,
    #[serde(skip)]
    pub imex: RunReport,
    #[serde(skip)]
    pub reference: RunReport,
}

impl BurgersComparison {
    pub fn snapshot_sav(&self) -> Snapshot {
        Snapshot::of(&self.sav.final_u)
    }

    /// `None` when the IMEX run diverged.
    pub fn snapshot_imex(&self) -> Option<Snapshot> {
        self.imex_divergence_step
            .is_none()
            .then(|| Snapshot::of(&self.imex.final_u))
    }

    pub fn snapshot_reference(&self) -> Snapshot {
        Snapshot::of(&self.reference.final_u)
    }

    /// `min_n eta^n > 0` and `max_n eta^n <= 1 + eps`.
    pub fn eta_in_range(&self, eps: f64) -> bool {
        self.eta_trace.iter().all(|&e| e > 0.0 && e <= 1.0 + eps)
    }
}

/// Viscous Burgers on `(-1, 1)` from `u0 = -sin(pi x)`: order-2 SAV and
/// order-2 IMEX at `dt` against an order-2 SAV reference at `dt_ref`.
///
/// When `T` is not a multiple of `dt` all three runs stop at
/// `ceil(T/dt) dt`, which must be a multiple of `dt_ref`.
pub fn burgers_compare(
    nu: f64,
    n: usize,
    dt: f64,
    dt_ref: f64,
    t_final: f64,
    exec: Execution,
) -> Result<BurgersComparison> {
    let grid = Grid::sine_1d(n)?;
    let problem = ProblemDefinition::burgers(&grid, nu)?;
    if !(dt > 0.0 && dt_ref > 0.0 && t_final > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need dt, dt_ref, T > 0 (dt = {dt}, dt_ref = {dt_ref}, T = {t_final})"
        )));
    }
    let steps = (t_final / dt - 1e-9).ceil().max(1.0) as usize;
    let t_end = steps as f64 * dt;
    let ref_steps = step_count(dt_ref, t_end)?;
    let t_ref = ref_steps as f64 * dt_ref;
    let u0 = Field::from_fn(&grid, |p| -(std::f64::consts::PI * p[0]).sin());
    let tableau = BdfTableau::new(2)?;
    let options = RunOptions {
        tolerate_divergence: true,
        ..Default::default()
    };

    let cases = [
        (dt, t_end, StepMode::Sav),
        (dt, t_end, StepMode::Imex),
        (dt_ref, t_ref, StepMode::Sav),
    ];
    let mut results = exec
        .map(&cases, |&(h, t, mode)| run(&problem, &tableau, h, t, mode, u0.clone(), &options))
        .into_iter();
    let mut next = || results.next().expect("three cases");
    let (sav, imex, reference) = (next()?, next()?, next()?);
    if let Some(d) = &reference.divergence {
        return Err(Error::Divergence {
            step: d.step,
            time: d.time,
        });
    }
    if let Some(d) = &sav.divergence {
        return Err(Error::Divergence {
            step: d.step,
            time: d.time,
        });
    }

    let ref_u = reference.final_u.physical();
    let ref_max = reference.final_u.max_abs();
    let deviation = |u: &Field| {
        u.physical()
            .iter()
            .zip(ref_u)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    };
    let sav_max = sav.final_u.max_abs();
    let imex_ok = imex.divergence.is_none() && imex.final_u.is_finite();
    let imex_max = imex_ok.then(|| imex.final_u.max_abs());

    Ok(BurgersComparison {
        nu,
        n,
        dt,
        dt_ref,
        t_requested: t_final,
        t_final: t_end,
        steps,
        ref_steps,
        ref_max_abs: ref_max,
        sav_max_abs: sav_max,
        sav_deviation: deviation(&sav.final_u),
        sav_overshoot: sav_max / ref_max - 1.0,
        imex_max_abs: imex_max,
        imex_deviation: imex_ok.then(|| deviation(&imex.final_u)),
        imex_overshoot: imex_max.map(|m| m / ref_max - 1.0),
        imex_divergence_step: imex.divergence.as_ref().map(|d| d.step),
        eta_trace: sav.records.iter().map(|r| r.eta).collect(),
        sav,
        imex,
        reference,
    })
}
