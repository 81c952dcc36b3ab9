//! Closed-form photon statistics against the truncated joint PMF, and the
//! structural properties of the model.

use dlcz::pgf::{
    cauchy_schwarz_parameter, conditional_read_mean, g2_conditional_auto, g2_cross, joint_pmf, mean_counts,
};
use dlcz::ModelParams;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn params() -> impl Strategy<Value = ModelParams> {
    (
        1e-3..=1.0f64,
        0.0..=1.0f64,
        0.0..=1.0f64,
        1e-3..=1.0f64,
        1e-3..=1.0f64,
        1.0..=3.0f64,
        1.0..=3.0f64,
    )
        .prop_map(|(mu, lambda_a, lambda_b, eta_x, eta_y, g2_aa, g2_bb)| ModelParams {
            mu,
            lambda_a,
            lambda_b,
            eta_x,
            eta_y,
            g2_aa,
            g2_bb,
        })
}

proptest! {
    #[test]
    fn closed_forms_match_pmf_moments(p in params()) {
        let m = joint_pmf(&p, 120).unwrap().moments();
        let (n_w, n_r) = mean_counts(&p);
        prop_assert!(rel(n_w, m.mean_w) < 1e-8);
        prop_assert!(rel(n_r, m.mean_r) < 1e-8);
        prop_assert!(rel(g2_cross(&p).unwrap(), m.g2_cross) < 1e-8);
        let mu_t = (m.heralded_read_mean - p.lambda_b) / p.eta_y;
        prop_assert!(rel(conditional_read_mean(&p).unwrap(), mu_t) < 1e-8);
        prop_assert!(rel(g2_conditional_auto(&p).unwrap(), m.g2_heralded_read) < 1e-8);
    }

    #[test]
    fn pmf_tail_is_small_below_unit_means(
        mu in 0.0..=1.0f64,
        lambda_a in 0.0..=1.0f64,
        lambda_b in 0.0..=1.0f64,
        eta_x in 1e-3..=1.0f64,
        eta_y in 1e-3..=1.0f64,
        g2_aa in 1.0..=2.0f64,
        g2_bb in 1.0..=2.0f64,
    ) {
        let p = ModelParams { mu, lambda_a, lambda_b, eta_x, eta_y, g2_aa, g2_bb };
        let tail = 1.0 - joint_pmf(&p, 40).unwrap().total();
        prop_assert!(tail < 1e-12, "tail {tail:e} at {p:?}");
    }

    #[test]
    fn g2_cross_non_increasing_in_noise(p in params(), d in 1e-6..0.5f64) {
        let g = g2_cross(&p).unwrap();
        let more_a = ModelParams { lambda_a: p.lambda_a + d, ..p };
        let more_b = ModelParams { lambda_b: p.lambda_b + d, ..p };
        prop_assert!(g2_cross(&more_a).unwrap() <= g);
        prop_assert!(g2_cross(&more_b).unwrap() <= g);
    }

    #[test]
    fn noiseless_g2_cross_is_thermal_and_efficiency_free(
        mu in 1e-4..=10.0f64,
        eta_x in 1e-4..=1.0f64,
        eta_y in 1e-4..=1.0f64,
    ) {
        let lossless = g2_cross(&ModelParams::lossless(mu)).unwrap();
        let lossy = g2_cross(&ModelParams { eta_x, eta_y, ..ModelParams::lossless(mu) }).unwrap();
        prop_assert_eq!(lossy, lossless);
        prop_assert!(rel(lossless, 2.0 + 1.0 / mu) < 1e-14);
    }

    #[test]
    fn g2_cross_approaches_thermal_limit(mu in 1e-3..=1.0f64, eta in 0.01..=1.0f64) {
        let limit = 2.0 + 1.0 / mu;
        let mut previous = f64::INFINITY;
        for lambda in [1e-2, 1e-4, 1e-6, 1e-8] {
            let p = ModelParams { lambda_a: lambda, lambda_b: lambda, eta_x: eta, eta_y: eta, ..ModelParams::lossless(mu) };
            let gap = limit - g2_cross(&p).unwrap();
            prop_assert!(gap >= 0.0 && gap <= previous);
            previous = gap;
        }
        prop_assert!(previous / limit < 1e-4);
    }

    #[test]
    fn cauchy_schwarz_with_thermal_marginals(g in 0.0..20.0f64) {
        let r = cauchy_schwarz_parameter(g, 2.0, 2.0).unwrap();
        prop_assert_eq!(r > 1.0, g > 2.0);
    }
}

/// The PMF bound at the corner of its domain (`μ = λ = 1`, perfect
/// detection, Poissonian noise), where the tail is largest for `g² = 1`.
#[test]
fn pmf_tail_at_domain_corner() {
    let p = ModelParams {
        lambda_a: 1.0,
        lambda_b: 1.0,
        ..ModelParams::lossless(1.0)
    };
    let tail = 1.0 - joint_pmf(&p, 40).unwrap().total();
    assert!(tail < 1e-12, "tail {tail:e}");
}

#[test]
fn conditional_auto_vanishes_for_ideal_herald() {
    let mut previous = f64::INFINITY;
    for (eta_x, lambda) in [(0.9, 1e-2), (0.99, 1e-4), (0.999, 1e-6), (1.0, 0.0)] {
        let p = ModelParams {
            eta_x,
            eta_y: 0.5,
            lambda_a: lambda,
            lambda_b: lambda,
            ..ModelParams::lossless(0.1)
        };
        let g = g2_conditional_auto(&p).unwrap();
        assert!(g < previous);
        previous = g;
    }
    assert_eq!(previous, 0.0);
}
