//! Closed forms against the exact DP oracle, the series recurrence and sampling.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use qrewind::analytics::{
    cumulative_success, cumulative_success_exact, first_passage_dist_exact, first_passage_series, first_passage_pmf, genfunc_closed,
    genfunc_series, return_pmf, return_pmf_exact, self_convolve, CurveMode,
};
use qrewind::prob::rational_to_f64;
use qrewind::walk::{dp_first_passage, dp_return, mc_first_passage};

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn formulas_equal_dp_on_decimal_grid() {
    for k in 0..=10 {
        let p = q(k, 10);
        let dp = dp_first_passage(&p, 41).unwrap();
        let formula = first_passage_dist_exact(&p, 41);
        assert_eq!(dp, formula, "first passage, p = {k}/10");
        let dp_ret = dp_return(&p, 41).unwrap();
        for t in 0..=41u64 {
            assert_eq!(dp_ret.get(t as usize), return_pmf_exact(&p, t), "return, p = {k}/10, t = {t}");
        }
    }
}

#[test]
fn float_mode_matches_rational_mode() {
    for k in 0..=10 {
        let pf = k as f64 / 10.0;
        let p = qrewind::Probability::Float(pf).to_rational();
        let dp = dp_first_passage(&pf, 41).unwrap();
        let formula = first_passage_dist_exact(&p, 41);
        for t in 1..=41u64 {
            let exact = rational_to_f64(&formula.get(t as usize));
            assert_eq!(first_passage_pmf(pf, t), exact);
            assert!((dp.get(t as usize) - exact).abs() <= 1e-12);
            assert_eq!(return_pmf(pf, t), rational_to_f64(&return_pmf_exact(&p, t)));
        }
    }
}

#[test]
fn fair_coin_values() {
    let half = q(1, 2);
    let d = first_passage_dist_exact(&half, 5);
    assert_eq!(d.as_slice(), &[q(0, 1), q(1, 2), q(0, 1), q(1, 8), q(0, 1), q(1, 16)]);
    assert_eq!(return_pmf_exact(&half, 2), q(1, 4));
    assert_eq!(cumulative_success_exact(&half, 4, CurveMode::Full), q(3, 8));
    assert_eq!(cumulative_success_exact(&half, 4, CurveMode::Commutator), q(5, 8));
}

#[test]
fn three_series_agree_to_201() {
    for p in [q(1, 2), q(1, 3), q(7, 10), q(1, 1), q(0, 1)] {
        let series = genfunc_series(&p, 201);
        assert_eq!(series, first_passage_dist_exact(&p, 201));
        assert_eq!(series, dp_first_passage(&p, 201).unwrap());
    }
}

#[test]
fn closed_form_matches_partial_sums() {
    for p in [0.1, 0.5, 0.9] {
        let d = first_passage_series(p, 400);
        for alpha in [0.2f64, 0.5, 0.8] {
            let partial: f64 = d.steps().map(|(t, c)| c * alpha.powi(t as i32)).sum();
            let bound = alpha.powi(401) / (1.0 - alpha);
            assert!((genfunc_closed(p, alpha) - partial).abs() <= bound + 1e-15);
        }
    }
}

#[test]
fn return_is_self_convolution() {
    let p = q(3, 10);
    let d = first_passage_dist_exact(&p, 60);
    let conv = self_convolve(&d);
    for t in 0..=60u64 {
        assert_eq!(conv.get(t as usize), return_pmf_exact(&p, t));
    }
    assert!(conv.as_slice().iter().fold(BigRational::zero(), |a, b| a + b) < BigRational::one());
}

#[test]
fn sampling_matches_pmf() {
    let n = 200_000u64;
    for p in [0.25, 0.5, 0.9] {
        let counts = mc_first_passage(p, 60, n, 17, 4);
        for t in 1..=60u64 {
            let pr = first_passage_pmf(p, t);
            let got = counts.counts[t as usize] as f64;
            if pr == 0.0 {
                assert_eq!(got, 0.0, "p = {p}, t = {t}");
                continue;
            }
            let sigma = (n as f64 * pr * (1.0 - pr)).sqrt();
            assert!((got - n as f64 * pr).abs() <= 5.0 * sigma + 1e-9, "p = {p}, t = {t}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn series_equals_formula_for_random_rationals(num in 0i64..=64, t in 1u64..60) {
        let p = q(num, 64);
        let series = genfunc_series(&p, t as usize);
        prop_assert_eq!(series.get(t as usize), first_passage_dist_exact(&p, t).get(t as usize));
    }

    #[test]
    fn cumulative_curves_are_monotone_in_m(p in 0.0f64..=1.0) {
        let mut prev = (0.0, 0.0);
        for m in 1..80 {
            let c = cumulative_success(p, m, CurveMode::Commutator);
            let f = cumulative_success(p, m, CurveMode::Full);
            prop_assert!(c + 1e-15 >= prev.0 && f + 1e-15 >= prev.1);
            prop_assert!(f <= c + 1e-15);
            prev = (c, f);
        }
    }
}
