//! Dissipative systems written as `u_t + A u + g(u) = f(t)`.
//!
//! Each problem provides the diagonal symbol of `A`, the explicit term `g`,
//! the energy `E(u) = 1/2 (L u, u) + int G(u) + c_shift |Omega|` and the
//! dissipation rate `K(u) >= 0` with `dE/dt = -K(u)` for the unforced flow.
//! The double well is `F(u) = (u^2 - 1)^2 / 4` throughout.

use crate::error::{Error, Result};
use crate::spectral::{dealias, inner, pointwise_map, Basis, Field, Grid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemKind {
    /// `u_t = alpha Lap u - F'(u)`, split as `A = -alpha Lap + s`, `g = F'(u) - s u`.
    AllenCahn { alpha: f64, stabilization: f64 },
    /// `u_t = m0 Lap (-alpha Lap u + F'(u))` with the same stabilized splitting
    /// applied inside the chemical potential.
    CahnHilliard {
        alpha: f64,
        mobility: f64,
        stabilization: f64,
    },
    /// `u_t - nu u_xx + u u_x = 0` with homogeneous Dirichlet conditions.
    Burgers { nu: f64 },
    /// `u_t + rate u = 0`; `E = 1/2 |u|^2 + c`, `K = rate |u|^2`.
    LinearDecay { rate: f64 },
}

impl ProblemKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::AllenCahn { .. } => "allen_cahn",
            ProblemKind::CahnHilliard { .. } => "cahn_hilliard",
            ProblemKind::Burgers { .. } => "burgers",
            ProblemKind::LinearDecay { .. } => "linear_decay",
        }
    }
}

fn double_well(v: f64) -> f64 {
    let w = v * v - 1.0;
    0.25 * w * w
}

fn double_well_derivative(v: f64) -> f64 {
    v * v * v - v
}

/// Temporal profile of a separable exact solution `u(x, t) = phi(x) tau(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeFactor {
    Sin,
    Exp { rate: f64 },
}

impl TimeFactor {
    pub fn value(self, t: f64) -> f64 {
        match self {
            TimeFactor::Sin => t.sin(),
            TimeFactor::Exp { rate } => (-rate * t).exp(),
        }
    }

    pub fn derivative(self, t: f64) -> f64 {
        match self {
            TimeFactor::Sin => t.cos(),
            TimeFactor::Exp { rate } => -rate * (-rate * t).exp(),
        }
    }
}

/// Closed-form solution `phi(x) tau(t)` sampled on a grid.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    profile: Field,
    time: TimeFactor,
}

impl ExactSolution {
    pub fn separable(profile: Field, time: TimeFactor) -> Self {
        Self {
            profile: profile.transformed(),
            time,
        }
    }

    /// `exp(sin(pi x) sin(pi y)) sin(t)` on a periodic grid.
    pub fn exp_sin_sin(grid: &Grid) -> Result<Self> {
        require_basis(grid, Basis::Fourier2D, "exp_sin_sin")?;
        let pi = std::f64::consts::PI;
        let profile = Field::from_fn(grid, |p| ((pi * p[0]).sin() * (pi * p[1]).sin()).exp());
        Ok(Self::separable(profile, TimeFactor::Sin))
    }

    /// `sin(pi x) sin(t)` on a sine grid.
    pub fn sin_pi_x(grid: &Grid) -> Result<Self> {
        require_basis(grid, Basis::Sine1D, "sin_pi_x")?;
        let pi = std::f64::consts::PI;
        let profile = Field::from_fn(grid, |p| (pi * p[0]).sin());
        Ok(Self::separable(profile, TimeFactor::Sin))
    }

    pub fn grid(&self) -> &Grid {
        self.profile.grid()
    }

    pub fn profile(&self) -> &Field {
        &self.profile
    }

    pub fn time_factor(&self) -> TimeFactor {
        self.time
    }

    pub fn sample(&self, t: f64) -> Field {
        self.profile.scaled(self.time.value(t))
    }

    pub fn time_derivative(&self, t: f64) -> Field {
        self.profile.scaled(self.time.derivative(t))
    }
}

fn require_basis(grid: &Grid, basis: Basis, problem: &'static str) -> Result<()> {
    if grid.basis() == basis {
        Ok(())
    } else {
        Err(Error::WrongBasis {
            problem,
            expected: basis.name(),
        })
    }
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

fn require_non_negative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be non-negative, got {v}"
        )))
    }
}

#[derive(Debug, Clone)]
pub struct ProblemDefinition {
    kind: ProblemKind,
    grid: Grid,
    linear_symbol: Vec<f64>,
    principal_symbol: Vec<f64>,
    c_shift: f64,
    exact: Option<ExactSolution>,
    forced: bool,
}

impl ProblemDefinition {
    fn build(kind: ProblemKind, grid: &Grid, linear: Vec<f64>, principal: Vec<f64>) -> Self {
        Self {
            kind,
            grid: grid.clone(),
            linear_symbol: linear,
            principal_symbol: principal,
            c_shift: 1.0 / grid.volume(),
            exact: None,
            forced: false,
        }
    }

    pub fn allen_cahn(grid: &Grid, alpha: f64, stabilization: f64) -> Result<Self> {
        require_basis(grid, Basis::Fourier2D, "allen_cahn")?;
        require_positive("alpha", alpha)?;
        require_non_negative("stabilization", stabilization)?;
        let symbol: Vec<f64> = grid
            .k_squared()
            .iter()
            .map(|k2| alpha * k2 + stabilization)
            .collect();
        Ok(Self::build(
            ProblemKind::AllenCahn {
                alpha,
                stabilization,
            },
            grid,
            symbol.clone(),
            symbol,
        ))
    }

    pub fn cahn_hilliard(grid: &Grid, alpha: f64, mobility: f64, stabilization: f64) -> Result<Self> {
        require_basis(grid, Basis::Fourier2D, "cahn_hilliard")?;
        require_positive("alpha", alpha)?;
        require_positive("mobility", mobility)?;
        require_non_negative("stabilization", stabilization)?;
        let k2 = grid.k_squared();
        let linear = k2
            .iter()
            .map(|k2| mobility * (alpha * k2 * k2 + stabilization * k2))
            .collect();
        let principal = k2.iter().map(|k2| alpha * k2 + stabilization).collect();
        Ok(Self::build(
            ProblemKind::CahnHilliard {
                alpha,
                mobility,
                stabilization,
            },
            grid,
            linear,
            principal,
        ))
    }

    pub fn burgers(grid: &Grid, nu: f64) -> Result<Self> {
        require_basis(grid, Basis::Sine1D, "burgers")?;
        require_positive("nu", nu)?;
        let linear = grid.k_squared().iter().map(|k2| nu * k2).collect();
        Ok(Self::build(
            ProblemKind::Burgers { nu },
            grid,
            linear,
            vec![1.0; grid.len()],
        ))
    }

    /// Scalar test equation `u' = -rate u` on any grid (every mode decays
    /// at the same rate). A one-point sine grid makes it a scalar ODE.
    pub fn linear_decay(grid: &Grid, rate: f64) -> Result<Self> {
        require_positive("rate", rate)?;
        Ok(Self::build(
            ProblemKind::LinearDecay { rate },
            grid,
            vec![rate; grid.len()],
            vec![1.0; grid.len()],
        ))
    }

    /// Sets the energy shift so that `E >= c_shift |Omega|`.
    pub fn with_c_shift(mut self, c_shift: f64) -> Result<Self> {
        require_non_negative("c_shift", c_shift)?;
        self.c_shift = c_shift;
        Ok(self)
    }

    /// Attaches a reference solution without adding forcing. Only meaningful
    /// when `exact` actually solves the unforced equation.
    pub fn with_exact_solution(mut self, exact: ExactSolution) -> Result<Self> {
        if exact.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        self.exact = Some(exact);
        self.forced = false;
        Ok(self)
    }

    /// Adds the forcing `f = u*_t + A u* + g(u*)` that makes `exact` a solution.
    pub fn with_manufactured_forcing(mut self, exact: ExactSolution) -> Result<Self> {
        if exact.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        self.exact = Some(exact);
        self.forced = true;
        Ok(self)
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn kind(&self) -> &ProblemKind {
        &self.kind
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn linear_symbol(&self) -> &[f64] {
        &self.linear_symbol
    }

    pub fn principal_symbol(&self) -> &[f64] {
        &self.principal_symbol
    }

    pub fn c_shift(&self) -> f64 {
        self.c_shift
    }

    pub fn exact(&self) -> Option<&ExactSolution> {
        self.exact.as_ref()
    }

    pub fn is_forced(&self) -> bool {
        self.forced
    }

    fn stabilization(&self) -> f64 {
        match self.kind {
            ProblemKind::AllenCahn { stabilization, .. }
            | ProblemKind::CahnHilliard { stabilization, .. } => stabilization,
            _ => 0.0,
        }
    }

    /// `F'(u) - s u` evaluated with the 2/3 rule on input and output.
    fn stabilized_well_derivative(&self, u: &Field) -> Field {
        let s = self.stabilization();
        dealias(&pointwise_map(&dealias(u), |v| double_well_derivative(v) - s * v))
    }

    pub fn apply_linear(&self, u: &Field) -> Field {
        u.apply_symbol(&self.linear_symbol)
    }

    /// Unforced explicit term `g(u)`.
    pub fn nonlinear(&self, u: &Field) -> Field {
        match self.kind {
            ProblemKind::AllenCahn { .. } => self.stabilized_well_derivative(u),
            ProblemKind::CahnHilliard { mobility, .. } => {
                let h = self.stabilized_well_derivative(u);
                let symbol: Vec<f64> = self.grid.k_squared().iter().map(|k2| mobility * k2).collect();
                h.apply_symbol(&symbol)
            }
            ProblemKind::Burgers { .. } => {
                let ud = dealias(u);
                let ux = ud.sine_derivative();
                let product: Vec<f64> = ud.physical().iter().zip(&ux).map(|(a, b)| a * b).collect();
                dealias(&Field::from_physical(&self.grid, product))
            }
            ProblemKind::LinearDecay { .. } => Field::zeros(&self.grid),
        }
    }

    /// Forcing at time `t`, if the problem carries a manufactured solution.
    pub fn forcing(&self, t: f64) -> Option<Field> {
        if !self.forced {
            return None;
        }
        let exact = self.exact.as_ref()?;
        let u = exact.sample(t);
        let ut = exact.time_derivative(t);
        let au = self.apply_linear(&u);
        let gu = self.nonlinear(&u);
        Some(
            Field::linear_combination([(1.0, &ut), (1.0, &au), (1.0, &gu)])
                .expect("all terms share the problem grid"),
        )
    }

    /// `(L u, u)`.
    pub fn principal_norm_sq(&self, u: &Field) -> f64 {
        u.quadratic_form(&self.principal_symbol)
    }

    /// `int G(u)` by uniform quadrature.
    pub fn potential_integral(&self, u: &Field) -> f64 {
        match self.kind {
            ProblemKind::AllenCahn { stabilization, .. }
            | ProblemKind::CahnHilliard { stabilization, .. } => {
                let s = stabilization;
                let sum: f64 = u
                    .physical()
                    .iter()
                    .map(|&v| double_well(v) - 0.5 * s * v * v)
                    .sum();
                sum * self.grid.cell_volume()
            }
            ProblemKind::Burgers { .. } | ProblemKind::LinearDecay { .. } => 0.0,
        }
    }

    /// `E(u) = 1/2 (L u, u) + int G(u) + c_shift |Omega|` (unforced functional).
    pub fn energy(&self, u: &Field) -> f64 {
        0.5 * self.principal_norm_sq(u) + self.potential_integral(u) + self.c_shift * self.grid.volume()
    }

    /// `K(u) >= 0`, the unforced energy dissipation rate.
    pub fn dissipation(&self, u: &Field) -> f64 {
        let w = self.grid.mode_weight();
        match self.kind {
            ProblemKind::AllenCahn { .. } => {
                let mu = Field::linear_combination([
                    (1.0, &self.apply_linear(u)),
                    (1.0, &self.nonlinear(u)),
                ])
                .expect("same grid");
                mu.l2_norm().powi(2)
            }
            ProblemKind::CahnHilliard { mobility, .. } => {
                let h = self.stabilized_well_derivative(u);
                let lu = u.apply_symbol(&self.principal_symbol);
                let sum: f64 = lu
                    .spectral()
                    .iter()
                    .zip(h.spectral())
                    .zip(self.grid.k_squared())
                    .map(|((a, b), k2)| k2 * (a + b).norm_sqr())
                    .sum();
                mobility * w * sum
            }
            ProblemKind::Burgers { nu } => nu * u.quadratic_form(self.grid.k_squared()),
            ProblemKind::LinearDecay { rate } => rate * u.l2_norm().powi(2),
        }
    }

    /// `dE/du = L u + G'(u)`.
    pub fn variational_derivative(&self, u: &Field) -> Field {
        let lu = u.apply_symbol(&self.principal_symbol);
        match self.kind {
            ProblemKind::AllenCahn { .. } | ProblemKind::CahnHilliard { .. } => {
                Field::linear_combination([(1.0, &lu), (1.0, &self.stabilized_well_derivative(u))])
                    .expect("same grid")
            }
            ProblemKind::Burgers { .. } | ProblemKind::LinearDecay { .. } => lu,
        }
    }

    /// Energy input `(dE/du, f(t))` of the forcing; zero for unforced problems.
    pub fn forcing_power(&self, u: &Field, t: f64) -> f64 {
        match self.forcing(t) {
            Some(f) => inner(&self.variational_derivative(u), &f),
            None => 0.0,
        }
    }

    /// A lower bound on `E(u) - 1/2 (L u, u)` valid for every `u`.
    pub fn energy_floor(&self) -> f64 {
        let s = self.stabilization();
        // min_v F(v) - s v^2 / 2 = -(s/2 + s^2/4)
        (self.c_shift - (0.5 * s + 0.25 * s * s)) * self.grid.volume()
    }

    /// Uniform bound `M_k^2` on `(L u^n, u^n)` implied by `r^n <= r0` and
    /// `E >= (L u, u)/2 + floor`, for correction exponent `p`. `None` when the
    /// energy floor is not positive.
    pub fn principal_bound_sq(&self, r0: f64, p: u32) -> Option<f64> {
        let floor = self.energy_floor();
        if !(floor > 0.0) || !(r0 >= 0.0) {
            return None;
        }
        let eta = |xi: f64| (1.0 - (1.0 - xi).powi(p as i32)).abs();
        let eta_max = |xi_max: f64| eta(xi_max.min(1.0)).max(eta(xi_max));
        let scale = floor.max(r0).max(1.0);
        let mut best: f64 = 0.0;
        let mut x = 1e-10 * scale;
        while x < 1e10 * scale {
            let e = eta_max(r0 / (0.5 * x + floor));
            best = best.max(x * e * e);
            x *= 1.002;
        }
        Some(best * 1.001)
    }

    /// `||u*_t + A u* + g(u*) - f||_{L2}` at time `t` (zero up to round-off
    /// for a manufactured problem).
    pub fn manufactured_residual(&self, t: f64) -> Result<f64> {
        let exact = self
            .exact
            .as_ref()
            .ok_or_else(|| Error::MissingExactSolution(self.name().into()))?;
        let u = exact.sample(t);
        let ut = exact.time_derivative(t);
        let f = self.forcing(t).unwrap_or_else(|| Field::zeros(&self.grid));
        let res = Field::linear_combination([
            (1.0, &ut),
            (1.0, &self.apply_linear(&u)),
            (1.0, &self.nonlinear(&u)),
            (-1.0, &f),
        ])?;
        Ok(res.l2_norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::fourier_2d(32, 32).unwrap()
    }

    #[test]
    fn double_well_critical_points() {
        assert_eq!(double_well_derivative(0.0), 0.0);
        assert_eq!(double_well(1.0), 0.0);
        assert_eq!(double_well(-1.0), 0.0);
    }

    #[test]
    fn allen_cahn_zero_and_unit_states() {
        let g = grid();
        let p = ProblemDefinition::allen_cahn(&g, 1e-4, 0.0).unwrap();
        let z = Field::zeros(&g);
        let vol = g.volume();
        assert!((p.energy(&z) - (0.25 + p.c_shift()) * vol).abs() < 1e-12);
        assert_eq!(p.principal_norm_sq(&z), 0.0);
        assert!(p.nonlinear(&z).physical().iter().all(|v| *v == 0.0));

        let one = Field::from_fn(&g, |_| 1.0);
        assert!((p.energy(&one) - p.c_shift() * vol).abs() < 1e-12);
        assert!(p.dissipation(&one) < 1e-24);
        assert!((p.c_shift() * vol - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wrong_basis_is_rejected() {
        let s = Grid::sine_1d(16).unwrap();
        assert!(matches!(
            ProblemDefinition::allen_cahn(&s, 1e-4, 0.0),
            Err(Error::WrongBasis { .. })
        ));
        assert!(ProblemDefinition::cahn_hilliard(&s, 0.04, 0.005, 0.0).is_err());
        assert!(ProblemDefinition::burgers(&grid(), 0.01).is_err());
        assert!(ExactSolution::exp_sin_sin(&s).is_err());
    }

    #[test]
    fn cahn_hilliard_symbols() {
        let g = grid();
        let (alpha, m0, s) = (0.04, 0.005, 0.5);
        let p = ProblemDefinition::cahn_hilliard(&g, alpha, m0, s).unwrap();
        assert_eq!(p.linear_symbol()[0], 0.0);
        let pi2 = PI * PI;
        let want = m0 * (alpha * pi2 * pi2 + s * pi2);
        assert!((p.linear_symbol()[1] - want).abs() < 1e-12 * want);

        let c = Field::from_fn(&g, |_| 0.3);
        assert!(p.dissipation(&c) < 1e-26);
    }

    #[test]
    fn cahn_hilliard_dissipation_matches_gradient_of_potential() {
        // Oracle: K = m0 ||grad mu||^2 with mu built pointwise from the analytic
        // Laplacian, integrated by parts as -(mu, Lap mu).
        let g = grid();
        let (alpha, m0) = (0.04, 0.005);
        let p = ProblemDefinition::cahn_hilliard(&g, alpha, m0, 0.0).unwrap();
        let u = Field::from_fn(&g, |x| 0.3 * (PI * x[0]).sin() * (PI * x[1]).cos());
        let mu = Field::from_fn(&g, |x| {
            let v = 0.3 * (PI * x[0]).sin() * (PI * x[1]).cos();
            alpha * 2.0 * PI * PI * v + v * v * v - v
        });
        let lap_mu = mu.apply_symbol(&g.laplacian_symbol());
        let want = -m0 * crate::spectral::inner(&mu, &lap_mu);
        let got = p.dissipation(&u);
        assert!((got - want).abs() < 1e-10 * want, "{got} vs {want}");
    }

    #[test]
    fn burgers_examples() {
        let s = Grid::sine_1d(64).unwrap();
        let nu = 0.05;
        let p = ProblemDefinition::burgers(&s, nu).unwrap();
        let z = Field::zeros(&s);
        assert!(p.nonlinear(&z).physical().iter().all(|v| *v == 0.0));
        assert_eq!(p.dissipation(&z), 0.0);

        let u = Field::from_fn(&s, |x| (PI * x[0]).sin());
        let gu = p.nonlinear(&u);
        assert!(crate::spectral::inner(&gu, &u).abs() < 1e-8);
        // nu * pi^2 * ||cos(pi x)||^2 on (-1, 1)
        assert!((p.dissipation(&u) - nu * PI * PI).abs() < 1e-10);
        // u u_x = pi sin(pi x) cos(pi x) = (pi/2) sin(2 pi x)
        for (v, x) in gu.physical().iter().zip(s.coordinates(0)) {
            assert!((v - 0.5 * PI * (2.0 * PI * x).sin()).abs() < 1e-11);
        }
    }

    #[test]
    fn manufactured_forcing_at_time_zero() {
        let g = grid();
        let p = ProblemDefinition::allen_cahn(&g, 1e-4, 0.0).unwrap();
        let exact = ExactSolution::exp_sin_sin(&g).unwrap();
        assert!(exact.sample(0.0).physical().iter().all(|v| *v == 0.0));
        let p = p.with_manufactured_forcing(exact).unwrap();
        let f0 = p.forcing(0.0).unwrap();
        let want = Field::from_fn(&g, |x| ((PI * x[0]).sin() * (PI * x[1]).sin()).exp());
        for (a, b) in f0.physical().iter().zip(want.physical()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn manufactured_residual_is_round_off() {
        let g = Grid::fourier_2d(64, 64).unwrap();
        let exact = ExactSolution::exp_sin_sin(&g).unwrap();
        let ac = ProblemDefinition::allen_cahn(&g, 1e-4, 0.0)
            .unwrap()
            .with_manufactured_forcing(exact.clone())
            .unwrap();
        let ch = ProblemDefinition::cahn_hilliard(&g, 0.04, 0.005, 0.0)
            .unwrap()
            .with_manufactured_forcing(exact)
            .unwrap();
        for t in [0.0, 0.13, 0.5, 0.77, 1.0] {
            assert!(ac.manufactured_residual(t).unwrap() <= 1e-8);
            assert!(ch.manufactured_residual(t).unwrap() <= 1e-8);
        }
        let plain = ProblemDefinition::allen_cahn(&g, 1e-4, 0.0).unwrap();
        assert!(matches!(
            plain.manufactured_residual(0.5),
            Err(Error::MissingExactSolution(_))
        ));
    }

    #[test]
    fn stabilization_leaves_energy_unchanged() {
        let g = grid();
        let u = Field::from_fn(&g, |x| 0.8 * (PI * x[0]).cos() + 0.2 * (PI * x[1]).sin());
        let e0 = ProblemDefinition::allen_cahn(&g, 1e-2, 0.0).unwrap().energy(&u);
        let e2 = ProblemDefinition::allen_cahn(&g, 1e-2, 2.0).unwrap().energy(&u);
        assert!((e0 - e2).abs() < 1e-12 * e0);
    }

    #[test]
    fn principal_bound_dominates_simple_cases() {
        let g = grid();
        let p = ProblemDefinition::allen_cahn(&g, 1e-2, 0.0).unwrap();
        let m = p.principal_bound_sq(10.0, 3).unwrap();
        assert!(m > 0.0 && m.is_finite());
        let neg = ProblemDefinition::allen_cahn(&g, 1e-2, 4.0).unwrap();
        assert!(neg.principal_bound_sq(10.0, 3).is_none());
    }

    #[test]
    fn variational_derivative_matches_operator_form() {
        let g = grid();
        let u = Field::from_fn(&g, |x| 0.3 + (PI * x[0]).sin() * (PI * x[1]).cos());
        let ac = ProblemDefinition::allen_cahn(&g, 1e-2, 1.0).unwrap();
        let mu = ac.variational_derivative(&u);
        let direct = Field::linear_combination([(1.0, &ac.apply_linear(&u)), (1.0, &ac.nonlinear(&u))]).unwrap();
        for (a, b) in mu.physical().iter().zip(direct.physical()) {
            assert!((a - b).abs() < 1e-12);
        }
        // CH: A u + g(u) = -m0 Lap(mu).
        let ch = ProblemDefinition::cahn_hilliard(&g, 4e-2, 5e-3, 0.0).unwrap();
        let mu = ch.variational_derivative(&u);
        let sym: Vec<f64> = g.k_squared().iter().map(|k2| 5e-3 * k2).collect();
        let lhs = Field::linear_combination([(1.0, &ch.apply_linear(&u)), (1.0, &ch.nonlinear(&u))]).unwrap();
        let rhs = mu.apply_symbol(&sym);
        for (a, b) in lhs.physical().iter().zip(rhs.physical()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert_eq!(ch.forcing_power(&u, 0.3), 0.0);
    }

    #[test]
    fn forced_energy_law_holds_on_exact_solution() {
        // dE(u*)/dt = -K(u*) + (dE/du(u*), f), checked by central differences.
        let g = grid();
        let exact = ExactSolution::exp_sin_sin(&g).unwrap();
        let problems = [
            ProblemDefinition::allen_cahn(&g, 1e-2, 0.0).unwrap(),
            ProblemDefinition::cahn_hilliard(&g, 4e-2, 5e-3, 0.0).unwrap(),
        ];
        for p in problems {
            let p = p.with_manufactured_forcing(exact.clone()).unwrap();
            for t in [0.2, 0.7] {
                let h = 1e-5;
                let de = (p.energy(&exact.sample(t + h)) - p.energy(&exact.sample(t - h))) / (2.0 * h);
                let u = exact.sample(t);
                let law = -p.dissipation(&u) + p.forcing_power(&u, t);
                assert!((de - law).abs() < 1e-5 * de.abs().max(1.0), "{}: {de} vs {law}", p.name());
            }
        }
    }
}
