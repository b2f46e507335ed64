use proptest::prelude::*;
use sav_core::harness::fit_rate;
use sav_core::spectral::{dealias, solve_shifted};
use sav_core::tableau::combine_history;
use sav_core::{BdfTableau, Field, Grid, ProblemDefinition};

fn fourier() -> Grid {
    Grid::fourier_2d(16, 8).unwrap()
}

fn sine() -> Grid {
    Grid::sine_1d(24).unwrap()
}

fn values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, n)
}

fn scalar(v: f64) -> Field {
    Field::from_physical(&Grid::sine_1d(1).unwrap(), vec![v])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_round_trip_and_parseval(fv in values(128), sv in values(24)) {
        for (grid, v) in [(fourier(), fv), (sine(), sv)] {
            let back = Field::from_spectral(&grid, Field::from_physical(&grid, v.clone()).spectral().to_vec());
            for (a, b) in back.physical().iter().zip(&v) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            let f = Field::from_physical(&grid, v);
            let physical = f.l2_norm().powi(2);
            let spectral = f.inner_spectral(&f);
            prop_assert!((physical - spectral).abs() <= 1e-10 * physical.max(1.0));
        }
    }

    #[test]
    fn shifted_solve_inverts_operator(v in values(128), shift in 0.01f64..100.0, alpha in 0.0f64..1.0) {
        let g = fourier();
        let symbol: Vec<f64> = g.k_squared().iter().map(|k2| alpha * k2).collect();
        let rhs = Field::from_physical(&g, v);
        let u = solve_shifted(shift, &symbol, &rhs).unwrap();
        let applied = Field::linear_combination([(shift, &u), (1.0, &u.apply_symbol(&symbol))]).unwrap();
        for (a, b) in applied.physical().iter().zip(rhs.physical()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn dealias_is_idempotent(v in values(128)) {
        let once = dealias(&Field::from_physical(&fourier(), v));
        let twice = dealias(&once);
        for (a, b) in once.physical().iter().zip(twice.physical()) {
            prop_assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn bdf_formulas_are_exact_on_polynomials(
        coeffs in prop::collection::vec(-2.0f64..2.0, 6),
        dt in 0.01f64..0.5,
        t0 in -1.0f64..1.0,
    ) {
        for k in 1..=5 {
            let tab = BdfTableau::new(k).unwrap();
            // Degree k for the derivative formula, degree k-1 for extrapolation.
            let poly = |deg: usize, t: f64| coeffs[..=deg].iter().rev().fold(0.0, |acc, c| acc * t + c);
            let dpoly = |deg: usize, t: f64| {
                (1..=deg).rev().fold(0.0, |acc, j| acc * t + j as f64 * coeffs[j])
            };
            let t_next = t0 + dt;
            let hist: Vec<Field> = (0..k).map(|j| scalar(poly(k, t0 - j as f64 * dt))).collect();
            let a = combine_history(tab.a_weights(), &hist).unwrap().physical()[0];
            let deriv = (tab.alpha() * poly(k, t_next) - a) / dt;
            prop_assert!((deriv - dpoly(k, t_next)).abs() < 1e-7 * (1.0 + dpoly(k, t_next).abs()));

            let hist: Vec<Field> = (0..k).map(|j| scalar(poly(k - 1, t0 - j as f64 * dt))).collect();
            let b = combine_history(tab.b_weights(), &hist).unwrap().physical()[0];
            prop_assert!((b - poly(k - 1, t_next)).abs() < 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn fitted_rate_is_positive_for_decreasing_errors(c in 0.01f64..100.0, p in 0.5f64..6.0) {
        let pts: Vec<(f64, f64)> = (0..4).map(|j| {
            let dt = 0.1 / 2f64.powi(j);
            (dt, c * dt.powf(p))
        }).collect();
        let rate = fit_rate(&pts).unwrap();
        prop_assert!(rate > 0.0);
        prop_assert!((rate - p).abs() < 1e-9);
    }

    #[test]
    fn energies_are_positive(v in values(128)) {
        let g = fourier();
        let u = Field::from_physical(&g, v);
        let ac = ProblemDefinition::allen_cahn(&g, 1e-4, 0.0).unwrap();
        let ch = ProblemDefinition::cahn_hilliard(&g, 0.04, 0.005, 0.0).unwrap();
        prop_assert!(ac.energy(&u) > 0.0);
        prop_assert!(ch.energy(&u) > 0.0);
        prop_assert!(ac.dissipation(&u) >= 0.0);
        prop_assert!(ch.dissipation(&u) >= 0.0);
    }

    #[test]
    fn burgers_term_is_skew(v in values(24)) {
        let g = sine();
        let u = dealias(&Field::from_physical(&g, v));
        let p = ProblemDefinition::burgers(&g, 0.01).unwrap();
        let work = sav_core::spectral::inner(&p.nonlinear(&u), &u);
        prop_assert!(work.abs() <= 1e-8 * u.l2_norm().powi(3).max(1e-300));
    }
}
