//! BDF*k* coefficients for the implicit history `A_k` and the explicit
//! extrapolation `B_k`.
//!
//! With `dt` fixed the scheme approximates `u_t(t^{n+1})` by
//! `(alpha * u^{n+1} - A_k(u^n)) / dt` where `A_k(u^n) = sum_i a_i u^{n-i}`,
//! and evaluates the nonlinear term at `B_k(v^n) = sum_i b_i v^{n-i}`, the
//! degree `k-1` extrapolation to `t^{n+1}`.

use std::fmt;

use crate::error::{Error, Result};
use crate::spectral::Field;

pub const MAX_ORDER: usize = 5;

/// Exact fraction with a positive denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub num: i64,
    pub den: i64,
}

impl Ratio {
    pub const fn new(num: i64, den: i64) -> Self {
        Self { num, den }
    }

    pub const fn int(n: i64) -> Self {
        Self { num: n, den: 1 }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    fn reduced(self) -> Self {
        let g = gcd(self.num.unsigned_abs(), self.den.unsigned_abs()) as i64;
        let s = if self.den < 0 { -1 } else { 1 };
        Self {
            num: s * self.num / g,
            den: s * self.den / g,
        }
    }

    /// Exact sum of a slice of fractions.
    pub fn sum(items: &[Ratio]) -> Ratio {
        items.iter().fold(Ratio::int(0), |acc, r| {
            Ratio::new(acc.num * r.den + r.num * acc.den, acc.den * r.den).reduced()
        })
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

fn exact_coefficients(order: usize) -> (Ratio, Vec<Ratio>, Vec<Ratio>) {
    let i = Ratio::int;
    let r = Ratio::new;
    match order {
        1 => (i(1), vec![i(1)], vec![i(1)]),
        2 => (r(3, 2), vec![i(2), r(-1, 2)], vec![i(2), i(-1)]),
        3 => (
            r(11, 6),
            vec![i(3), r(-3, 2), r(1, 3)],
            vec![i(3), i(-3), i(1)],
        ),
        4 => (
            r(25, 12),
            vec![i(4), i(-3), r(4, 3), r(-1, 4)],
            vec![i(4), i(-6), i(4), i(-1)],
        ),
        5 => (
            r(137, 60),
            vec![i(5), i(-5), r(10, 3), r(-5, 4), r(1, 5)],
            vec![i(5), i(-10), i(10), i(-5), i(1)],
        ),
        _ => unreachable!("order validated by caller"),
    }
}

/// Coefficients of the order-`k` IMEX BDF scheme plus the exponent `p` of the
/// correction factor `eta = 1 - (1 - xi)^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct BdfTableau {
    order: usize,
    alpha_exact: Ratio,
    a_exact: Vec<Ratio>,
    b_exact: Vec<Ratio>,
    alpha: f64,
    a_weights: Vec<f64>,
    b_weights: Vec<f64>,
    eta_exponent: u32,
}

impl BdfTableau {
    pub fn new(order: usize) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(Error::UnsupportedOrder(order));
        }
        let (alpha_exact, a_exact, b_exact) = exact_coefficients(order);
        Ok(Self {
            order,
            alpha: alpha_exact.to_f64(),
            a_weights: a_exact.iter().map(|r| r.to_f64()).collect(),
            b_weights: b_exact.iter().map(|r| r.to_f64()).collect(),
            alpha_exact,
            a_exact,
            b_exact,
            eta_exponent: default_eta_exponent(order),
        })
    }

    /// Replaces the correction exponent. Exponents below `order + 1` (or 3 for
    /// first order) lose formal accuracy but are allowed for experiments.
    pub fn with_eta_exponent(mut self, exponent: u32) -> Result<Self> {
        if exponent == 0 {
            return Err(Error::InvalidArgument(
                "eta exponent must be at least 1".into(),
            ));
        }
        self.eta_exponent = exponent;
        Ok(self)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Weights of `u^n, u^{n-1}, ...` in `A_k`, most recent first.
    pub fn a_weights(&self) -> &[f64] {
        &self.a_weights
    }

    /// Weights of `ubar^n, ubar^{n-1}, ...` in `B_k`, most recent first.
    pub fn b_weights(&self) -> &[f64] {
        &self.b_weights
    }

    pub fn eta_exponent(&self) -> u32 {
        self.eta_exponent
    }

    pub fn alpha_exact(&self) -> Ratio {
        self.alpha_exact
    }

    pub fn a_exact(&self) -> &[Ratio] {
        &self.a_exact
    }

    pub fn b_exact(&self) -> &[Ratio] {
        &self.b_exact
    }

    /// `eta = 1 - (1 - xi)^p`.
    pub fn eta(&self, xi: f64) -> f64 {
        1.0 - (1.0 - xi).powi(self.eta_exponent as i32)
    }
}

/// Shorthand for [`BdfTableau::new`].
pub fn tableau(order: usize) -> Result<BdfTableau> {
    BdfTableau::new(order)
}

pub fn default_eta_exponent(order: usize) -> u32 {
    if order == 1 {
        3
    } else {
        order as u32 + 1
    }
}

/// Returns `sum_i weights[i] * history[i]`, `history[0]` being the most recent level.
pub fn combine_history<'a, I>(weights: &[f64], history: I) -> Result<Field>
where
    I: IntoIterator<Item = &'a Field>,
{
    let levels: Vec<&Field> = history.into_iter().take(weights.len()).collect();
    if levels.len() < weights.len() || weights.is_empty() {
        return Err(Error::InsufficientHistory {
            needed: weights.len(),
            available: levels.len(),
        });
    }
    Field::linear_combination(weights.iter().copied().zip(levels))
}
