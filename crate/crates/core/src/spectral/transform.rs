use num_complex::Complex64;

use super::{Grid, Plans};

pub(crate) fn forward(grid: &Grid, physical: &[f64]) -> Vec<Complex64> {
    match grid.plans() {
        Plans::Fourier {
            x_forward,
            y_forward,
            ..
        } => {
            let (nx, ny) = (grid.extents()[0], grid.extents()[1]);
            let mut buf: Vec<Complex64> = physical.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            x_forward.process(&mut buf);
            let mut cols = transpose(&buf, nx, ny);
            y_forward.process(&mut cols);
            let scale = 1.0 / (nx * ny) as f64;
            let mut out = transpose(&cols, ny, nx);
            out.iter_mut().for_each(|c| *c *= scale);
            out
        }
        Plans::Sine { .. } => {
            let n = grid.extents()[0];
            let scale = 2.0 / (n + 1) as f64;
            sine_sums(grid, physical)
                .into_iter()
                .map(|s| Complex64::new(scale * s, 0.0))
                .collect()
        }
    }
}

pub(crate) fn inverse(grid: &Grid, spectral: &[Complex64]) -> Vec<f64> {
    match grid.plans() {
        Plans::Fourier {
            x_inverse,
            y_inverse,
            ..
        } => {
            let (nx, ny) = (grid.extents()[0], grid.extents()[1]);
            let mut cols = transpose(spectral, nx, ny);
            y_inverse.process(&mut cols);
            let mut buf = transpose(&cols, ny, nx);
            x_inverse.process(&mut buf);
            // Hermitian projection: the imaginary part is round-off for real fields.
            buf.into_iter().map(|c| c.re).collect()
        }
        Plans::Sine { .. } => {
            let coeffs: Vec<f64> = spectral.iter().map(|c| c.re).collect();
            sine_sums(grid, &coeffs)
        }
    }
}

/// `S_i = sum_{j=1}^{n} v_j sin(pi i j / (n + 1))` for `i = 1..=n`, via the
/// odd periodic extension of length `2 (n + 1)`.
pub(crate) fn sine_sums(grid: &Grid, values: &[f64]) -> Vec<f64> {
    let ext = extended_fft(grid, values, -1.0);
    ext[1..=values.len()].iter().map(|c| -0.5 * c.im).collect()
}

/// `C_i = sum_{j=1}^{n} v_j cos(pi i j / (n + 1))` for `i = 1..=n`, via the
/// even periodic extension.
pub(crate) fn cosine_sums(grid: &Grid, values: &[f64]) -> Vec<f64> {
    let ext = extended_fft(grid, values, 1.0);
    ext[1..=values.len()].iter().map(|c| 0.5 * c.re).collect()
}

fn extended_fft(grid: &Grid, values: &[f64], parity: f64) -> Vec<Complex64> {
    let Plans::Sine { extended } = grid.plans() else {
        unreachable!("extension transforms only exist on sine grids");
    };
    let n = values.len();
    let m = 2 * (n + 1);
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (j, &v) in values.iter().enumerate() {
        buf[j + 1] = Complex64::new(v, 0.0);
        buf[m - j - 1] = Complex64::new(parity * v, 0.0);
    }
    extended.process(&mut buf);
    buf
}

/// Transposes a row-major `height x width` matrix.
fn transpose(data: &[Complex64], width: usize, height: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    for r in 0..height {
        for c in 0..width {
            out[c * height + r] = data[r * width + c];
        }
    }
    out
}
