//! Implicit-explicit BDF*k* schemes (k = 1..5) with a scalar auxiliary
//! variable for dissipative evolution equations of the form
//!
//! ```text
//! u_t + A u + g(u) = f(t),      dE/dt = -K(u)
//! ```
//!
//! The linear operator `A` is treated implicitly through a diagonal spectral
//! solve, the nonlinear term `g` is extrapolated explicitly, and the scalar
//! `r` shadows the energy so that `r^{n+1} <= r^n` holds for any step size.
//! The corrected solution is `u^{n+1} = eta * ubar^{n+1}` with
//! `eta = 1 - (1 - xi)^p`, `xi = r^{n+1} / E(ubar^{n+1})`.
//!
//! Modules:
//! - [`tableau`]: BDF coefficients and history combinations.
//! - [`spectral`]: periodic Fourier (2D) and Dirichlet sine (1D) grids and fields.
//! - [`problems`]: Allen-Cahn, Cahn-Hilliard, Burgers and a scalar linear test problem.
//! - [`stepper`]: the SAV / IMEX time loop.
//! - [`harness`]: convergence studies, stability probes and the Burgers comparison.
//! - [`par`]: ordered case-level parallelism with a sequential fallback.

pub mod error;
pub mod harness;
pub mod par;
pub mod problems;
pub mod spectral;
pub mod stepper;
pub mod tableau;

pub use error::{Error, Result};
pub use problems::{ExactSolution, ProblemDefinition, ProblemKind};
pub use spectral::{Basis, Field, Grid};
pub use stepper::{RunReport, SavState, StepMode};
pub use tableau::BdfTableau;
