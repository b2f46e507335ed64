use std::sync::OnceLock;

use num_complex::Complex64;

use super::transform;
use super::{Basis, Grid};
use crate::error::{Error, Result};

/// Real grid function with lazily materialized physical and spectral views.
///
/// At least one representation is always populated; the other is computed on
/// first access and cached.
#[derive(Clone)]
pub struct Field {
    grid: Grid,
    physical: OnceLock<Vec<f64>>,
    spectral: OnceLock<Vec<Complex64>>,
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Field")
            .field("grid", &self.grid)
            .field("physical_valid", &self.physical.get().is_some())
            .field("spectral_valid", &self.spectral.get().is_some())
            .finish()
    }
}

impl Field {
    pub fn from_physical(grid: &Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "physical values do not match grid");
        Self {
            grid: grid.clone(),
            physical: OnceLock::from(values),
            spectral: OnceLock::new(),
        }
    }

    pub fn from_spectral(grid: &Grid, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), grid.len(), "coefficients do not match grid");
        Self {
            grid: grid.clone(),
            physical: OnceLock::new(),
            spectral: OnceLock::from(coeffs),
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::from_physical(grid, vec![0.0; grid.len()])
    }

    /// Samples `f` at the grid points. The closure receives `[x, y]` (the
    /// second coordinate is 0 on 1D grids).
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Self::from_physical(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn physical(&self) -> &[f64] {
        self.physical.get_or_init(|| {
            let coeffs = self.spectral.get().expect("field has no valid representation");
            transform::inverse(&self.grid, coeffs)
        })
    }

    pub fn spectral(&self) -> &[Complex64] {
        self.spectral.get_or_init(|| {
            let values = self.physical.get().expect("field has no valid representation");
            transform::forward(&self.grid, values)
        })
    }

    pub fn has_physical(&self) -> bool {
        self.physical.get().is_some()
    }

    pub fn has_spectral(&self) -> bool {
        self.spectral.get().is_some()
    }

    /// Copy of the field with both representations populated.
    pub fn transformed(&self) -> Self {
        self.physical();
        self.spectral();
        self.clone()
    }

    pub fn into_physical(self) -> Vec<f64> {
        self.physical();
        self.physical.into_inner().expect("populated above")
    }

    fn check_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `sum_i w_i f_i`. Works in spectral space when every term already has
    /// coefficients, otherwise in physical space.
    pub fn linear_combination<'a, I>(terms: I) -> Result<Field>
    where
        I: IntoIterator<Item = (f64, &'a Field)>,
    {
        let terms: Vec<(f64, &Field)> = terms.into_iter().collect();
        let Some(&(_, first)) = terms.first() else {
            return Err(Error::InvalidArgument("empty linear combination".into()));
        };
        for (_, f) in &terms[1..] {
            first.check_grid(f)?;
        }
        let grid = &first.grid;
        if terms.iter().all(|(_, f)| f.has_spectral()) {
            let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
            for (w, f) in &terms {
                for (a, c) in acc.iter_mut().zip(f.spectral()) {
                    *a += c * *w;
                }
            }
            Ok(Field::from_spectral(grid, acc))
        } else {
            let mut acc = vec![0.0; grid.len()];
            for (w, f) in &terms {
                for (a, v) in acc.iter_mut().zip(f.physical()) {
                    *a += w * v;
                }
            }
            Ok(Field::from_physical(grid, acc))
        }
    }

    pub fn scaled(&self, c: f64) -> Field {
        let physical = self
            .physical
            .get()
            .map(|p| p.iter().map(|v| c * v).collect::<Vec<_>>());
        let spectral = self
            .spectral
            .get()
            .map(|s| s.iter().map(|v| v * c).collect::<Vec<_>>());
        Field {
            grid: self.grid.clone(),
            physical: physical.map(OnceLock::from).unwrap_or_default(),
            spectral: spectral.map(OnceLock::from).unwrap_or_default(),
        }
    }

    /// Applies a diagonal operator given by its per-mode symbol.
    pub fn apply_symbol(&self, symbol: &[f64]) -> Field {
        assert_eq!(symbol.len(), self.grid.len());
        let coeffs = self
            .spectral()
            .iter()
            .zip(symbol)
            .map(|(c, s)| c * *s)
            .collect();
        Field::from_spectral(&self.grid, coeffs)
    }

    /// `u_x` at the grid points of a 1D sine field.
    pub fn sine_derivative(&self) -> Vec<f64> {
        assert_eq!(self.grid.basis(), Basis::Sine1D);
        let k = self.grid.wavenumbers(0);
        let scaled: Vec<f64> = self
            .spectral()
            .iter()
            .zip(k)
            .map(|(c, k)| c.re * k)
            .collect();
        transform::cosine_sums(&self.grid, &scaled)
    }

    pub fn is_finite(&self) -> bool {
        match (self.physical.get(), self.spectral.get()) {
            (Some(p), _) => p.iter().all(|v| v.is_finite()),
            (None, Some(s)) => s.iter().all(|c| c.re.is_finite() && c.im.is_finite()),
            (None, None) => unreachable!("field has no valid representation"),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.physical().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Domain average `|Omega|^{-1} int u`.
    pub fn mean(&self) -> f64 {
        match self.grid.basis() {
            Basis::Fourier2D => self.spectral()[0].re,
            Basis::Sine1D => {
                self.physical().iter().sum::<f64>() * self.grid.cell_volume() / self.grid.volume()
            }
        }
    }

    /// Physical quadrature `int f` over the domain.
    pub fn integral(&self) -> f64 {
        self.physical().iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        sobolev_norm(self, 0.0)
    }

    /// L2 inner product evaluated from coefficients.
    pub fn inner_spectral(&self, other: &Field) -> f64 {
        assert!(self.grid == other.grid, "inner product across grids");
        let sum: f64 = self
            .spectral()
            .iter()
            .zip(other.spectral())
            .map(|(a, b)| (a * b.conj()).re)
            .sum();
        self.grid.mode_weight() * sum
    }

    /// `w * sum_m symbol_m |c_m|^2`, i.e. `(S u, u)` for a diagonal operator `S`.
    pub fn quadratic_form(&self, symbol: &[f64]) -> f64 {
        let sum: f64 = self
            .spectral()
            .iter()
            .zip(symbol)
            .map(|(c, s)| s * c.norm_sqr())
            .sum();
        self.grid.mode_weight() * sum
    }
}

/// Solves `(shift + S) x = rhs` for a diagonal operator with symbol `S`.
pub fn solve_shifted(shift: f64, op_symbol: &[f64], rhs: &Field) -> Result<Field> {
    assert_eq!(op_symbol.len(), rhs.grid().len());
    let mut out = Vec::with_capacity(op_symbol.len());
    for (mode, (c, s)) in rhs.spectral().iter().zip(op_symbol).enumerate() {
        let denom = shift + s;
        if !(denom > 0.0) {
            return Err(Error::IndefiniteOperator { mode, value: denom });
        }
        out.push(c / denom);
    }
    Ok(Field::from_spectral(rhs.grid(), out))
}

/// `(sum_m w (1 + |k_m|^2)^s |c_m|^2)^{1/2}`; `s = 0` gives the L2 norm.
pub fn sobolev_norm(f: &Field, s: f64) -> f64 {
    let sum: f64 = f
        .spectral()
        .iter()
        .zip(f.grid().k_squared())
        .map(|(c, k2)| {
            let w = if s == 0.0 { 1.0 } else { (1.0 + k2).powf(s) };
            w * c.norm_sqr()
        })
        .sum();
    (f.grid().mode_weight() * sum).sqrt()
}

/// Zeroes every mode above two thirds of the Nyquist index (per dimension).
pub fn dealias(f: &Field) -> Field {
    let keep = f.grid().keep_after_dealias();
    let coeffs = f
        .spectral()
        .iter()
        .zip(keep)
        .map(|(c, &k)| if k { *c } else { Complex64::new(0.0, 0.0) })
        .collect();
    Field::from_spectral(f.grid(), coeffs)
}

pub fn pointwise_map(f: &Field, func: impl Fn(f64) -> f64) -> Field {
    Field::from_physical(f.grid(), f.physical().iter().map(|&v| func(v)).collect())
}

/// L2 inner product by uniform quadrature on the grid points.
pub fn inner(f: &Field, g: &Field) -> f64 {
    assert!(f.grid() == g.grid(), "inner product across grids");
    let sum: f64 = f.physical().iter().zip(g.physical()).map(|(a, b)| a * b).sum();
    sum * f.grid().cell_volume()
}
