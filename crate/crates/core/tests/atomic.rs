//! Faddeeva function, angular-momentum algebra and Raman couplings.

use dlcz::atomic::cesium::cs_d1_fwm_scheme;
use dlcz::atomic::{
    clebsch_gordan, coupling_table, faddeeva, find_magic_detuning, find_static_zero, format_scheme, parse_scheme,
    raman_coupling_doppler, raman_coupling_static, HalfInt, RamanLevelScheme,
};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

proptest! {
    #[test]
    fn faddeeva_reflection_symmetry(x in -50.0..50.0f64, y in -5.0..50.0f64) {
        let z = Complex64::new(x, y);
        let a = faddeeva(-z.conj());
        let b = faddeeva(z).conj();
        prop_assert!((a - b).norm() <= 1e-13 * b.norm().max(1e-300), "{a} vs {b}");
    }

    #[test]
    fn faddeeva_bounded_on_real_axis(x in -1e3..1e3f64) {
        let w = faddeeva(Complex64::new(x, 0.0));
        prop_assert!(w.norm() <= 1.0);
        // Re w(x) = exp(−x²) on the real axis.
        prop_assert!((w.re - (-x * x).exp()).abs() < 1e-14);
    }
}

#[test]
fn faddeeva_origin_is_exactly_one() {
    assert_eq!(faddeeva(Complex64::new(0.0, 0.0)), Complex64::new(1.0, 0.0));
}

/// `(1/√π) ∫ exp(−t²) / (D + iγ/2 − Γ_D t) dt` by composite Simpson.
fn doppler_average(scheme: &RamanLevelScheme, delta: f64) -> Complex64 {
    let n = 400_000;
    let (lo, hi) = (-9.0, 9.0);
    let h = (hi - lo) / n as f64;
    let f = |t: f64| -> Complex64 {
        scheme
            .levels
            .iter()
            .map(|l| {
                l.coupling
                    / Complex64::new(delta + l.offset_mhz - scheme.gamma_doppler * t, scheme.gamma / 2.0)
            })
            .sum::<Complex64>()
            * (-t * t).exp()
    };
    let mut sum = f(lo) + f(hi);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += f(lo + h * k as f64) * w;
    }
    sum * h / 3.0 / std::f64::consts::PI.sqrt()
}

#[test]
fn doppler_coupling_matches_velocity_quadrature() {
    let cs = cs_d1_fwm_scheme(43.0);
    for delta in [-3000.0, -1167.68, -600.0, 0.0, 5.0, 400.0, 917.0, 2500.0] {
        let a = raman_coupling_doppler(&cs, delta);
        let b = doppler_average(&cs, delta);
        assert!((a - b).norm() < 1e-6 * b.norm(), "Δ = {delta}: {a} vs {b}");
    }
}

#[test]
fn far_detuned_doppler_and_static_forms_are_proportional() {
    let cs = cs_d1_fwm_scheme(43.0);
    for side in [1.0, -1.0] {
        let ratios: Vec<Complex64> = [8000.0, 12000.0, 20000.0, 40000.0]
            .iter()
            .map(|d| {
                let delta = side * d;
                raman_coupling_doppler(&cs, delta) / raman_coupling_static(&cs, delta).unwrap()
            })
            .collect();
        for r in &ratios {
            assert!((r - ratios[0]).norm() < 0.01 * ratios[0].norm(), "{r} vs {}", ratios[0]);
        }
    }
}

#[test]
fn doppler_coupling_is_continuous() {
    let cs = cs_d1_fwm_scheme(43.0);
    let h = 1e-6;
    let mut delta = -3000.0;
    while delta < 3000.0 {
        let a = raman_coupling_doppler(&cs, delta);
        let b = raman_coupling_doppler(&cs, delta + h);
        assert!((a - b).norm() < 1e-6 * a.norm().max(1e-12), "jump at {delta}");
        delta += 7.3;
    }
}

#[test]
fn magic_minimum_is_below_every_grid_point() {
    let cs = cs_d1_fwm_scheme(43.0);
    let range = (-3000.0, 3000.0);
    let report = find_magic_detuning(&cs, range).unwrap();
    let table = coupling_table(&cs, range, 1.0).unwrap();
    assert!(table.iter().all(|(_, _, d)| report.coupling_abs <= d.norm()));
    assert!(report.outside_doppler_width);
    assert!(report.distance_to_resonances_mhz.iter().all(|&d| d > cs.gamma_doppler));
}

#[test]
fn toy_scheme_static_zero_is_exact() {
    let toy = RamanLevelScheme::new(vec![(0.0, 1.0), (1.0, -2.0)], 0.01, 0.01).unwrap();
    assert_eq!(raman_coupling_static(&toy, 1.0).unwrap(), 0.0);
    let zero = find_static_zero(&toy, (-0.5, 3.0)).unwrap();
    assert!((zero - 1.0).abs() < 1e-12, "{zero}");
    let file = parse_scheme(include_str!("../data/toy_two_level.scheme")).unwrap();
    assert_eq!(file, toy);
}

#[test]
fn symmetric_scheme_has_zero_midway() {
    let s = RamanLevelScheme::new(vec![(-1.0, 1.0), (1.0, 1.0)], 0.01, 0.01).unwrap();
    assert_eq!(raman_coupling_static(&s, 0.0).unwrap(), 0.0);
    assert!(find_static_zero(&s, (-0.5, 0.7)).unwrap().abs() < 1e-12);
}

#[test]
fn scheme_text_round_trip() {
    let cs = cs_d1_fwm_scheme(43.0);
    let back = parse_scheme(&format_scheme(&cs)).unwrap();
    assert_eq!(back, cs);
}

fn halves(max_twice: i64) -> impl Iterator<Item = HalfInt> {
    (0..=max_twice).map(HalfInt::from_twice)
}

fn projections(j: HalfInt) -> impl Iterator<Item = HalfInt> {
    (-j.twice()..=j.twice()).step_by(2).map(HalfInt::from_twice)
}

fn couplings(j1: HalfInt, j2: HalfInt) -> impl Iterator<Item = HalfInt> {
    let lo = (j1.twice() - j2.twice()).abs();
    (lo..=j1.twice() + j2.twice()).step_by(2).map(HalfInt::from_twice)
}

#[test]
fn clebsch_gordan_orthogonality_and_exchange_symmetry() {
    for j1 in halves(12) {
        for j2 in halves(12).filter(|j2| j2.twice() <= j1.twice()) {
            for big_j in couplings(j1, j2) {
                for m in projections(big_j) {
                    let mut norm = BigRational::zero();
                    for m1 in projections(j1) {
                        let m2 = HalfInt::from_twice(m.twice() - m1.twice());
                        if m2.twice().abs() > j2.twice() {
                            continue;
                        }
                        let c = clebsch_gordan(j1, m1, j2, m2, big_j, m);
                        norm += c.square();
                        let swapped = clebsch_gordan(j2, m2, j1, m1, big_j, m);
                        let phase = (j1.twice() + j2.twice() - big_j.twice()) / 2;
                        let expected = if phase % 2 == 0 { c.clone() } else { c.clone().neg() };
                        assert_eq!(swapped.signed_square(), expected.signed_square());
                    }
                    assert_eq!(norm, BigRational::one(), "j1 {j1} j2 {j2} J {big_j} M {m}");
                }
            }
        }
    }
}

#[test]
fn clebsch_gordan_cross_orthogonality() {
    for j1 in halves(8) {
        for j2 in halves(8) {
            let js: Vec<HalfInt> = couplings(j1, j2).collect();
            for (a, &ja) in js.iter().enumerate() {
                for &jb in &js[a + 1..] {
                    for m in projections(ja).filter(|m| m.twice().abs() <= jb.twice()) {
                        let dot: f64 = projections(j1)
                            .filter_map(|m1| {
                                let m2 = HalfInt::from_twice(m.twice() - m1.twice());
                                (m2.twice().abs() <= j2.twice()).then(|| {
                                    clebsch_gordan(j1, m1, j2, m2, ja, m).to_f64()
                                        * clebsch_gordan(j1, m1, j2, m2, jb, m).to_f64()
                                })
                            })
                            .sum();
                        assert!(dot.abs() < 1e-13, "⟨{ja}|{jb}⟩ = {dot}");
                    }
                }
            }
        }
    }
}
