//! Caesium D1 line constants and the four-wave-mixing level scheme.
//!
//! Constants are standard reference values for ¹³³Cs (Steck, "Cesium D Line
//! Data"), not fitted quantities.

use num_rational::BigRational;
use num_traits::ToPrimitive;

use super::angular::{wigner_3j, wigner_6j, HalfInt};
use super::raman::{RamanLevel, RamanLevelScheme};

/// D1 (6²S₁/₂ → 6²P₁/₂) vacuum wavelength, m.
pub const D1_WAVELENGTH_M: f64 = 894.592_959_86e-9;
/// Natural linewidth of the D1 line (FWHM), MHz.
pub const D1_NATURAL_LINEWIDTH_MHZ: f64 = 4.575;
/// Hyperfine splitting of 6²P₁/₂ between F′ = 4 and F′ = 3, MHz.
pub const P12_HYPERFINE_SPLITTING_MHZ: f64 = 1167.680;
/// Atomic mass, kg.
pub const MASS_KG: f64 = 2.206_946_50e-25;
pub const NUCLEAR_SPIN: HalfInt = HalfInt::from_twice(7);
const BOLTZMANN: f64 = 1.380_649e-23;

/// Doppler 1/e half-width `√(2 k_B T / m) / λ` in MHz.
pub fn doppler_width_mhz(temperature_celsius: f64) -> f64 {
    let t = temperature_celsius + 273.15;
    (2.0 * BOLTZMANN * t / MASS_KG).sqrt() / D1_WAVELENGTH_M * 1e-6
}

/// Relative hyperfine transition strength
/// `S_{F F′} = (2F′ + 1)(2J′ + 1) {J J′ 1; F′ F I}²` for the D1 line.
pub fn d1_strength(f: HalfInt, f_prime: HalfInt) -> BigRational {
    let half = HalfInt::from_twice(1);
    let six = wigner_6j(half, half, HalfInt::int(1), f_prime, f, NUCLEAR_SPIN);
    six.square().clone() * BigRational::from_integer(((f_prime.twice() + 1) * 2).into())
}

/// Signed Raman coupling through `F′` for `|F=4, m=4⟩ → |F′, 3⟩` (σ⁻) and
/// `|F′, 3⟩ → |F=4, m=3⟩` (π): the product of the two dipole matrix
/// elements in units of the reduced line element. The phase factors of the
/// Wigner-Eckart theorem cancel between the two legs, leaving
/// `S_{4F′} · (F′ 1 4; −3 −1 4) · (F′ 1 4; −3 0 3)`.
pub fn fwm_coupling(f_prime: HalfInt) -> f64 {
    let four = HalfInt::int(4);
    let one = HalfInt::int(1);
    let m3 = HalfInt::int(-3);
    let leg1 = wigner_3j(f_prime, one, four, m3, HalfInt::int(-1), four);
    let leg2 = wigner_3j(f_prime, one, four, m3, HalfInt::int(0), HalfInt::int(3));
    let s = d1_strength(four, f_prime).to_f64().unwrap_or(f64::NAN);
    s * leg1.to_f64() * leg2.to_f64()
}

/// The two-level D1 scheme with `Δ` measured from the `F = 4 → F′ = 4`
/// resonance; `F′ = 3` lies 1167.68 MHz below.
pub fn cs_d1_fwm_scheme(temperature_celsius: f64) -> RamanLevelScheme {
    let level = |f_prime: i64, offset: f64| RamanLevel {
        offset_mhz: offset,
        coupling: fwm_coupling(HalfInt::int(f_prime)),
        label: Some(format!("F'={f_prime}")),
    };
    RamanLevelScheme {
        levels: vec![level(4, 0.0), level(3, P12_HYPERFINE_SPLITTING_MHZ)],
        gamma: D1_NATURAL_LINEWIDTH_MHZ,
        gamma_doppler: doppler_width_mhz(temperature_celsius),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    #[test]
    fn d1_strengths_from_f4() {
        let q = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        assert_eq!(d1_strength(HalfInt::int(4), HalfInt::int(4)), q(5, 12));
        assert_eq!(d1_strength(HalfInt::int(4), HalfInt::int(3)), q(7, 12));
        assert_eq!(d1_strength(HalfInt::int(3), HalfInt::int(4)), q(3, 4));
    }

    #[test]
    fn fwm_couplings_have_opposite_signs() {
        let c4 = fwm_coupling(HalfInt::int(4));
        let c3 = fwm_coupling(HalfInt::int(3));
        assert!(c4 * c3 < 0.0);
    }

    #[test]
    fn doppler_width_at_operating_temperature() {
        let w = doppler_width_mhz(43.0);
        assert!((w - 222.3).abs() < 0.2, "{w}");
    }
}
