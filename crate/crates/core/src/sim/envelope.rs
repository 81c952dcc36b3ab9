//! Temporal envelopes of detected read light.
//!
//! All times are measured from the start of the read pulse. Retrieved photons
//! and the symmetric part of the noise follow an exponentially decaying
//! envelope; the asymmetric noise grows linearly through the delay and the
//! pulse, so its density inside the pulse is proportional to `τ_D + t`.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagSource {
    Retrieval,
    SymNoise,
    AsymNoise,
}

/// Draws from `exp(−t/τ)` truncated to `[0, pulse]`; uniform when `τ` is
/// `None` or infinite.
pub fn sample_truncated_exp<R: Rng + ?Sized>(decay_us: Option<f64>, pulse_us: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    match decay_us {
        Some(tau) if tau.is_finite() => {
            let t = -tau * (u * (-(pulse_us / tau)).exp_m1()).ln_1p();
            t.clamp(0.0, pulse_us)
        }
        _ => u * pulse_us,
    }
}

/// Draws from a density proportional to `offset + t` on `[0, pulse]`.
pub fn sample_linear_ramp<R: Rng + ?Sized>(offset_us: f64, pulse_us: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    let total = offset_us * pulse_us + 0.5 * pulse_us * pulse_us;
    let c = 2.0 * u * total;
    // Root of t²/2 + a·t = u·total, written to avoid cancellation at large a.
    let t = c / (offset_us + (offset_us * offset_us + c).sqrt());
    if t.is_finite() {
        t.clamp(0.0, pulse_us)
    } else {
        0.0
    }
}

/// Fraction of an exponential envelope falling before `window`.
pub fn exp_fraction(decay_us: Option<f64>, window_us: f64, pulse_us: f64) -> f64 {
    let w = window_us.min(pulse_us);
    match decay_us {
        Some(tau) if tau.is_finite() => (-w / tau).exp_m1() / (-pulse_us / tau).exp_m1(),
        _ => w / pulse_us,
    }
}

/// Fraction of the linear ramp `offset + t` falling before `window`.
pub fn ramp_fraction(offset_us: f64, window_us: f64, pulse_us: f64) -> f64 {
    let w = window_us.min(pulse_us);
    (offset_us * w + 0.5 * w * w) / (offset_us * pulse_us + 0.5 * pulse_us * pulse_us)
}
