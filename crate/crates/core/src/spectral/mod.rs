//! Uniform grids with diagonal spectral operators.
//!
//! Two bases are supported:
//!
//! * [`Basis::Fourier2D`]: periodic box `[a_x, b_x) x [a_y, b_y)` with `nx * ny`
//!   points, stored row-major with `x` fastest. Coefficients are the full
//!   complex DFT scaled by `1 / (nx * ny)`, so `u(x) = sum_m c_m exp(i k_m . x)`.
//! * [`Basis::Sine1D`]: Dirichlet interval `(a, b)` with `n` interior points
//!   `x_i = a + i h`, `h = L / (n + 1)`, and the DST-I expansion
//!   `u(x) = sum_{j=1}^{n} b_j sin(j pi (x - a) / L)`.
//!
//! Both normalizations make the discrete L2 inner product a weighted sum of
//! coefficient products (see [`Grid::mode_weight`]), so Parseval holds exactly.

mod field;
mod transform;

pub use field::{dealias, inner, pointwise_map, sobolev_norm, solve_shifted, Field};

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Fourier2D,
    Sine1D,
}

impl Basis {
    pub fn name(self) -> &'static str {
        match self {
            Basis::Fourier2D => "periodic Fourier 2D",
            Basis::Sine1D => "Dirichlet sine 1D",
        }
    }
}

pub(crate) enum Plans {
    Fourier {
        x_forward: Arc<dyn Fft<f64>>,
        x_inverse: Arc<dyn Fft<f64>>,
        y_forward: Arc<dyn Fft<f64>>,
        y_inverse: Arc<dyn Fft<f64>>,
    },
    Sine {
        extended: Arc<dyn Fft<f64>>,
    },
}

struct GridData {
    basis: Basis,
    extents: Vec<usize>,
    domain: Vec<(f64, f64)>,
    wavenumbers: Vec<Vec<f64>>,
    k_sq: Vec<f64>,
    keep_after_dealias: Vec<bool>,
    plans: Plans,
}

/// Immutable, cheaply clonable grid description. FFT plans are built once at
/// construction and shared by every field on the grid.
#[derive(Clone)]
pub struct Grid(Arc<GridData>);

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("basis", &self.0.basis)
            .field("extents", &self.0.extents)
            .field("domain", &self.0.domain)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.basis == other.0.basis
                && self.0.extents == other.0.extents
                && self.0.domain == other.0.domain)
    }
}

/// Signed FFT index for position `i` of an `n`-point transform. The Nyquist
/// entry of an even transform is reported as `+n/2`.
fn signed_index(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl Grid {
    /// Periodic `nx x ny` grid on `[0, 2) x [0, 2)`.
    pub fn fourier_2d(nx: usize, ny: usize) -> Result<Self> {
        Self::fourier_2d_with_domain(nx, ny, [(0.0, 2.0), (0.0, 2.0)])
    }

    pub fn fourier_2d_with_domain(nx: usize, ny: usize, domain: [(f64, f64); 2]) -> Result<Self> {
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n == 0 || n % 2 != 0 {
                return Err(Error::InvalidArgument(format!(
                    "Fourier extent {name} = {n} must be positive and even"
                )));
            }
        }
        check_domain(&domain)?;
        let lx = domain[0].1 - domain[0].0;
        let ly = domain[1].1 - domain[1].0;
        let kx: Vec<f64> = (0..nx)
            .map(|i| 2.0 * PI * signed_index(i, nx) as f64 / lx)
            .collect();
        let ky: Vec<f64> = (0..ny)
            .map(|i| 2.0 * PI * signed_index(i, ny) as f64 / ly)
            .collect();

        let mut k_sq = Vec::with_capacity(nx * ny);
        let mut keep = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                k_sq.push(kx[ix] * kx[ix] + ky[iy] * ky[iy]);
                // 2/3 rule: drop |n| > (2/3) * (N/2) in either direction.
                let sx = signed_index(ix, nx).unsigned_abs() as usize;
                let sy = signed_index(iy, ny).unsigned_abs() as usize;
                keep.push(3 * sx <= nx && 3 * sy <= ny);
            }
        }

        let mut planner = FftPlanner::new();
        let plans = Plans::Fourier {
            x_forward: planner.plan_fft_forward(nx),
            x_inverse: planner.plan_fft_inverse(nx),
            y_forward: planner.plan_fft_forward(ny),
            y_inverse: planner.plan_fft_inverse(ny),
        };
        Ok(Self(Arc::new(GridData {
            basis: Basis::Fourier2D,
            extents: vec![nx, ny],
            domain: domain.to_vec(),
            wavenumbers: vec![kx, ky],
            k_sq,
            keep_after_dealias: keep,
            plans,
        })))
    }

    /// Dirichlet sine grid with `n` interior points on `(-1, 1)`.
    pub fn sine_1d(n: usize) -> Result<Self> {
        Self::sine_1d_with_domain(n, (-1.0, 1.0))
    }

    pub fn sine_1d_with_domain(n: usize, domain: (f64, f64)) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "sine grid needs at least one interior point".into(),
            ));
        }
        check_domain(&[domain])?;
        let len = domain.1 - domain.0;
        let k: Vec<f64> = (1..=n).map(|j| j as f64 * PI / len).collect();
        let k_sq = k.iter().map(|v| v * v).collect();
        let keep = (1..=n).map(|j| 3 * j <= 2 * n).collect();
        let mut planner = FftPlanner::new();
        let plans = Plans::Sine {
            extended: planner.plan_fft_forward(2 * (n + 1)),
        };
        Ok(Self(Arc::new(GridData {
            basis: Basis::Sine1D,
            extents: vec![n],
            domain: vec![domain],
            wavenumbers: vec![k],
            k_sq,
            keep_after_dealias: keep,
            plans,
        })))
    }

    pub fn basis(&self) -> Basis {
        self.0.basis
    }

    pub fn extents(&self) -> &[usize] {
        &self.0.extents
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.0.domain
    }

    /// Number of grid values (equal to the number of spectral modes).
    pub fn len(&self) -> usize {
        self.0.extents.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Signed wavenumbers along dimension `dim` (Fourier), or `j pi / L` for
    /// sine mode `j = 1..=n`.
    pub fn wavenumbers(&self, dim: usize) -> &[f64] {
        &self.0.wavenumbers[dim]
    }

    /// `|k_m|^2` for each mode in storage order.
    pub fn k_squared(&self) -> &[f64] {
        &self.0.k_sq
    }

    /// Measure of the domain.
    pub fn volume(&self) -> f64 {
        self.0.domain.iter().map(|(a, b)| b - a).product()
    }

    /// Quadrature weight of a single grid point.
    pub fn cell_volume(&self) -> f64 {
        match self.0.basis {
            Basis::Fourier2D => self.volume() / self.len() as f64,
            Basis::Sine1D => self.volume() / (self.0.extents[0] + 1) as f64,
        }
    }

    /// Factor `w` in `||u||^2 = w * sum_m |c_m|^2`.
    pub fn mode_weight(&self) -> f64 {
        match self.0.basis {
            Basis::Fourier2D => self.volume(),
            Basis::Sine1D => 0.5 * self.volume(),
        }
    }

    /// Physical coordinates of grid point `idx` (storage order).
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let d = &self.0.domain;
        match self.0.basis {
            Basis::Fourier2D => {
                let nx = self.0.extents[0];
                let ny = self.0.extents[1];
                let (ix, iy) = (idx % nx, idx / nx);
                [
                    d[0].0 + (d[0].1 - d[0].0) * ix as f64 / nx as f64,
                    d[1].0 + (d[1].1 - d[1].0) * iy as f64 / ny as f64,
                ]
            }
            Basis::Sine1D => {
                let n = self.0.extents[0];
                [d[0].0 + (d[0].1 - d[0].0) * (idx + 1) as f64 / (n + 1) as f64, 0.0]
            }
        }
    }

    /// Per-dimension coordinate lists.
    pub fn coordinates(&self, dim: usize) -> Vec<f64> {
        let (a, b) = self.0.domain[dim];
        let n = self.0.extents[dim];
        match self.0.basis {
            Basis::Fourier2D => (0..n).map(|i| a + (b - a) * i as f64 / n as f64).collect(),
            Basis::Sine1D => (1..=n)
                .map(|i| a + (b - a) * i as f64 / (n + 1) as f64)
                .collect(),
        }
    }

    /// Per-mode symbol of the Laplacian: `-|k|^2`.
    pub fn laplacian_symbol(&self) -> Vec<f64> {
        self.0.k_sq.iter().map(|k| -k).collect()
    }

    pub(crate) fn keep_after_dealias(&self) -> &[bool] {
        &self.0.keep_after_dealias
    }

    pub(crate) fn plans(&self) -> &Plans {
        &self.0.plans
    }
}

/// Free-function form of [`Grid::laplacian_symbol`].
pub fn laplacian_symbol(grid: &Grid) -> Vec<f64> {
    grid.laplacian_symbol()
}

fn check_domain(domain: &[(f64, f64)]) -> Result<()> {
    for &(a, b) in domain {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidArgument(format!(
                "invalid interval ({a}, {b})"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_extents() {
        assert!(Grid::fourier_2d(63, 64).is_err());
        assert!(Grid::fourier_2d(0, 64).is_err());
        assert!(Grid::sine_1d(0).is_err());
        assert!(Grid::sine_1d_with_domain(8, (1.0, -1.0)).is_err());
    }

    #[test]
    fn laplacian_symbol_values() {
        let g = Grid::fourier_2d(8, 8).unwrap();
        let lap = g.laplacian_symbol();
        assert_eq!(lap[0], 0.0);
        // mode (1, 0) on period 2 has k = pi
        assert!((lap[1] + PI * PI).abs() < 1e-14);
        // mode (0, 1)
        assert!((lap[8] + PI * PI).abs() < 1e-14);
        // mode (-1, 0)
        assert!((lap[7] + PI * PI).abs() < 1e-14);

        let s = Grid::sine_1d(10).unwrap();
        let lap = laplacian_symbol(&s);
        for (idx, v) in lap.iter().enumerate() {
            let j = (idx + 1) as f64;
            assert!((v + (j * PI / 2.0).powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn wavenumbers_follow_domain_length() {
        let g = Grid::fourier_2d_with_domain(4, 6, [(0.0, 1.0), (0.0, 3.0)]).unwrap();
        assert!((g.wavenumbers(0)[1] - 2.0 * PI).abs() < 1e-14);
        assert!((g.wavenumbers(1)[1] - 2.0 * PI / 3.0).abs() < 1e-14);
        assert_eq!(g.wavenumbers(0)[2], 2.0 * PI * 2.0);
        assert!((g.wavenumbers(0)[3] + 2.0 * PI).abs() < 1e-14);
        assert_eq!(g.volume(), 3.0);
        assert_eq!(g.cell_volume(), 3.0 / 24.0);
    }

    #[test]
    fn sine_points_are_interior() {
        let g = Grid::sine_1d(3).unwrap();
        let xs = g.coordinates(0);
        assert_eq!(xs, vec![-0.5, 0.0, 0.5]);
        assert_eq!(g.point(1)[0], 0.0);
        assert_eq!(g.cell_volume(), 0.5);
    }

    #[test]
    fn grid_equality_is_structural() {
        let a = Grid::fourier_2d(8, 8).unwrap();
        let b = Grid::fourier_2d(8, 8).unwrap();
        let c = Grid::fourier_2d(8, 16).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
