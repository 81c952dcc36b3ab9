//! Raman coupling summed over excited levels and its zero ("magic") point.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::faddeeva::faddeeva;
use super::AtomicError;

const SQRT_PI: f64 = 1.772_453_850_905_516;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RamanLevel {
    /// `δ_m`: the level is resonant at `Δ = −δ_m`.
    pub offset_mhz: f64,
    /// Signed product of the two transition couplings.
    pub coupling: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Excited levels contributing to a two-photon Raman transition; all
/// frequencies in MHz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RamanLevelScheme {
    pub levels: Vec<RamanLevel>,
    /// Natural linewidth `γ` (FWHM).
    pub gamma: f64,
    /// Doppler width `Γ_D` (1/e half-width).
    pub gamma_doppler: f64,
}

impl RamanLevelScheme {
    pub fn new(levels: Vec<(f64, f64)>, gamma: f64, gamma_doppler: f64) -> Result<Self, AtomicError> {
        let scheme = Self {
            levels: levels
                .into_iter()
                .map(|(offset_mhz, coupling)| RamanLevel {
                    offset_mhz,
                    coupling,
                    label: None,
                })
                .collect(),
            gamma,
            gamma_doppler,
        };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn validate(&self) -> Result<(), AtomicError> {
        if self.levels.is_empty() {
            return Err(AtomicError::InvalidScheme("no levels".into()));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(AtomicError::InvalidScheme(format!("gamma = {}", self.gamma)));
        }
        if !(self.gamma_doppler > 0.0 && self.gamma_doppler.is_finite()) {
            return Err(AtomicError::InvalidScheme(format!(
                "doppler width = {}",
                self.gamma_doppler
            )));
        }
        if self
            .levels
            .iter()
            .any(|l| !(l.offset_mhz.is_finite() && l.coupling.is_finite()))
        {
            return Err(AtomicError::InvalidScheme("non-finite level entry".into()));
        }
        Ok(())
    }

    /// Detunings `Δ = −δ_m` at which the levels are resonant.
    pub fn resonances(&self) -> Vec<f64> {
        self.levels.iter().map(|l| -l.offset_mhz).collect()
    }

    /// Whether two couplings of opposite sign exist, the condition for a
    /// zero of the static coupling between resonances.
    pub fn has_opposite_signs(&self) -> bool {
        self.levels.iter().any(|l| l.coupling > 0.0) && self.levels.iter().any(|l| l.coupling < 0.0)
    }
}

/// `Σ c_m / (Δ + δ_m)`.
pub fn raman_coupling_static(scheme: &RamanLevelScheme, delta: f64) -> Result<f64, AtomicError> {
    let mut sum = 0.0;
    for level in &scheme.levels {
        let d = delta + level.offset_mhz;
        if d == 0.0 {
            return Err(AtomicError::OnResonance(delta));
        }
        sum += level.coupling / d;
    }
    Ok(sum)
}

/// Doppler-averaged coupling `Σ c_m · (−i√π/Γ_D) · w((Δ + δ_m + iγ/2)/Γ_D)`.
///
/// This is the thermal velocity average of `Σ c_m / (Δ_m − kv + iγ/2)`. The
/// prefactor makes it tend to the static form (with `iγ/2` in the
/// denominators) far from all resonances.
pub fn raman_coupling_doppler(scheme: &RamanLevelScheme, delta: f64) -> Complex64 {
    let gd = scheme.gamma_doppler;
    let pre = Complex64::new(0.0, -SQRT_PI / gd);
    scheme
        .levels
        .iter()
        .map(|l| {
            let z = Complex64::new(delta + l.offset_mhz, scheme.gamma / 2.0) / gd;
            l.coupling * pre * faddeeva(z)
        })
        .sum()
}

/// Zero of the static coupling between the poles in `range`, by sign change
/// on a grid and bisection.
pub fn find_static_zero(scheme: &RamanLevelScheme, range: (f64, f64)) -> Result<f64, AtomicError> {
    scheme.validate()?;
    let (lo, hi) = check_range(range)?;
    let poles = scheme.resonances();
    let n = 10_000;
    let step = (hi - lo) / n as f64;
    let eval = |x: f64| raman_coupling_static(scheme, x).ok();
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..=n {
        let x = lo + step * k as f64;
        let Some(v) = eval(x) else {
            prev = None;
            continue;
        };
        if v == 0.0 {
            return Ok(x);
        }
        if let Some((xp, vp)) = prev {
            let pole_between = poles.iter().any(|&p| p > xp && p < x);
            if vp.signum() != v.signum() && !pole_between {
                return Ok(bisect(|t| eval(t).unwrap_or(f64::NAN), xp, x, vp));
            }
        }
        prev = Some((x, v));
    }
    Err(AtomicError::NoZero { lo, hi })
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    if f(a).abs() <= f(b).abs() {
        a
    } else {
        b
    }
}

fn check_range(range: (f64, f64)) -> Result<(f64, f64), AtomicError> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(AtomicError::EmptyRange { lo, hi });
    }
    Ok((lo, hi))
}

/// Result of a magic-detuning search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagicReport {
    pub detuning_mhz: f64,
    pub coupling_abs: f64,
    /// Distance to each resonance, in level order.
    pub distance_to_resonances_mhz: Vec<f64>,
    pub doppler_width_mhz: f64,
    /// True when every resonance is further away than the Doppler width.
    pub outside_doppler_width: bool,
    /// Grid points scanned before refinement.
    pub grid_points: usize,
}

/// Minimum of `|R_D(Δ)|` inside `range`: 1 MHz grid scan, then golden
/// section search on `|R_D|²` in the bracketing grid cells to below 1 kHz.
pub fn find_magic_detuning(scheme: &RamanLevelScheme, range: (f64, f64)) -> Result<MagicReport, AtomicError> {
    scheme.validate()?;
    let (lo, hi) = check_range(range)?;
    let n = ((hi - lo) / 1.0).ceil().max(2.0) as usize;
    let step = (hi - lo) / n as f64;
    let cost = |x: f64| raman_coupling_doppler(scheme, x).norm_sqr();
    let values: Vec<f64> = (0..=n).map(|k| cost(lo + step * k as f64)).collect();
    let (k_min, &v_min) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is non-empty");
    if k_min == 0 || k_min == n {
        return Err(AtomicError::NoInteriorMinimum { lo, hi });
    }
    let a = lo + step * (k_min - 1) as f64;
    let b = lo + step * (k_min + 1) as f64;
    let (mut x, mut vx) = golden_section(cost, a, b, 1e-4);
    let x_grid = lo + step * k_min as f64;
    if vx > v_min {
        x = x_grid;
        vx = v_min;
    }
    let distances: Vec<f64> = scheme.resonances().iter().map(|r| (x - r).abs()).collect();
    let outside = distances.iter().all(|&d| d > scheme.gamma_doppler);
    Ok(MagicReport {
        detuning_mhz: x,
        coupling_abs: vx.sqrt(),
        distance_to_resonances_mhz: distances,
        doppler_width_mhz: scheme.gamma_doppler,
        outside_doppler_width: outside,
        grid_points: n + 1,
    })
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .expect("three candidates")
}

/// `(Δ, R_static, R_doppler)` on an evenly spaced grid; the static value is
/// `None` on a pole.
pub fn coupling_table(
    scheme: &RamanLevelScheme,
    range: (f64, f64),
    step: f64,
) -> Result<Vec<(f64, Option<f64>, Complex64)>, AtomicError> {
    let (lo, hi) = check_range(range)?;
    if !(step > 0.0) {
        return Err(AtomicError::EmptyRange { lo, hi });
    }
    let n = ((hi - lo) / step).round() as usize;
    Ok((0..=n)
        .map(|k| {
            let x = lo + step * k as f64;
            (x, raman_coupling_static(scheme, x).ok(), raman_coupling_doppler(scheme, x))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_examples() {
        let s = RamanLevelScheme::new(vec![(0.0, 1.0), (1.0, -2.0)], 1.0, 1.0).unwrap();
        assert_eq!(raman_coupling_static(&s, 1.0).unwrap(), 0.0);
        assert!(matches!(raman_coupling_static(&s, 0.0), Err(AtomicError::OnResonance(_))));
        let single = RamanLevelScheme::new(vec![(0.0, 3.0)], 1.0, 1.0).unwrap();
        assert_eq!(raman_coupling_static(&single, 4.0).unwrap(), 0.75);
    }

    #[test]
    fn toy_static_zero_is_exact() {
        let s = RamanLevelScheme::new(vec![(0.0, 1.0), (1.0, -2.0)], 0.1, 0.1).unwrap();
        assert_eq!(find_static_zero(&s, (0.5, 3.0)).unwrap(), 1.0);
    }

    #[test]
    fn equal_signs_have_no_zero_outside_the_poles() {
        let s = RamanLevelScheme::new(vec![(0.0, 1.0), (50.0, 0.4)], 1.0, 1.0).unwrap();
        assert!(find_static_zero(&s, (1.0, 500.0)).is_err());
        assert!(find_static_zero(&s, (-500.0, -51.0)).is_err());
        // Between the resonances a zero does exist.
        let z = find_static_zero(&s, (-49.0, -1.0)).unwrap();
        assert!(raman_coupling_static(&s, z).unwrap().abs() < 1e-12);
    }

    #[test]
    fn symmetric_scheme_minimum_at_zero() {
        let s = RamanLevelScheme::new(vec![(-100.0, 1.0), (100.0, 1.0)], 2.0, 10.0).unwrap();
        let r = find_magic_detuning(&s, (-50.5, 49.5)).unwrap();
        assert!(r.detuning_mhz.abs() < 1e-3);
        assert!(find_static_zero(&s, (-50.0, 50.0)).unwrap().abs() < 1e-9);
    }

    #[test]
    fn boundary_minimum_is_reported() {
        let s = RamanLevelScheme::new(vec![(0.0, 1.0)], 1.0, 1.0).unwrap();
        assert!(matches!(
            find_magic_detuning(&s, (10.0, 50.0)),
            Err(AtomicError::NoInteriorMinimum { .. })
        ));
        assert!(matches!(
            find_magic_detuning(&s, (10.0, 10.0)),
            Err(AtomicError::EmptyRange { .. })
        ));
    }

    #[test]
    fn far_detuned_doppler_form_is_static() {
        let s = RamanLevelScheme::new(vec![(0.0, 1.0), (3.0, -0.5)], 1e-6, 0.01).unwrap();
        for delta in [1.0, 1.7] {
            let ratio = raman_coupling_doppler(&s, 100.0 * delta) / raman_coupling_static(&s, 100.0 * delta).unwrap();
            assert!((ratio - 1.0).norm() < 1e-2);
        }
    }
}
