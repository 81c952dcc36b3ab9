//! Photon statistics of a two-mode squeezed state with independent detected
//! noise.
//!
//! Write photons `X` and stored excitations `Y` form thermal pairs with
//! generating function `1 / (1 + μ(1 − st))`. Detection is binomial thinning
//! of the signal modes only (`s → 1 + η_X(s − 1)`, likewise for `t`), and
//! independent noise with *detected* means `λ_A`, `λ_B` is added on top:
//! `W = X + A`, `R = Y + B`.

mod efficiency;
mod noise;
mod pmf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use efficiency::{
    escape_efficiency, excitation_probability, p0_from_counts, EfficiencyChain,
    ExcitationEstimate, WriteNoiseLine,
};
pub use noise::NoiseLaw;
pub use pmf::{joint_pmf, JointPmf, PmfMoments};

pub(crate) use noise::sample_thermal;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("generating function argument {name} = {value} outside [0, 1]")]
    OutOfDomain { name: &'static str, value: f64 },
    #[error("correlation undefined: signal and noise both vanish")]
    UndefinedCorrelation,
    #[error("conditioning on a single write click is impossible: P(W = 1) = 0")]
    DegenerateConditioning,
    #[error("division by zero in {0}")]
    ZeroDivisor(&'static str),
    #[error("cell cavity is singular (R·T² = 1)")]
    SingularCavity,
    #[error("noise with mean {mean} and g2 = {g2} cannot be realised as Poissonian/thermal counts")]
    UnrealizableNoise { mean: f64, g2: f64 },
}

fn default_g2() -> f64 {
    1.0
}

/// The correlation model: pair mean, detected noise means, detection
/// efficiencies and the noise auto-correlations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mu: f64,
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub eta_x: f64,
    pub eta_y: f64,
    #[serde(default = "default_g2")]
    pub g2_aa: f64,
    #[serde(default = "default_g2")]
    pub g2_bb: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            mu: 0.0,
            lambda_a: 0.0,
            lambda_b: 0.0,
            eta_x: 1.0,
            eta_y: 1.0,
            g2_aa: 1.0,
            g2_bb: 1.0,
        }
    }
}

impl ModelParams {
    /// Noiseless, lossless model with pair mean `mu`.
    pub fn lossless(mu: f64) -> Self {
        Self {
            mu,
            ..Self::default()
        }
    }

    /// Model at a given write power, with the write noise taken from a noise
    /// line. `⟨n_W⟩ = η_X μ + offset + slope·⟨n_W⟩` is solved for `⟨n_W⟩`.
    pub fn with_noise_line(
        mu: f64,
        eta_x: f64,
        eta_y: f64,
        line: &WriteNoiseLine,
        lambda_b: f64,
        g2_bb: f64,
    ) -> Result<Self, ModelError> {
        let n_w = line.mean_write_counts(eta_x * mu)?;
        let params = Self {
            mu,
            lambda_a: line.noise_at(n_w),
            lambda_b,
            eta_x,
            eta_y,
            g2_aa: 1.0,
            g2_bb,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let nonneg = [
            ("mu", self.mu),
            ("lambda_a", self.lambda_a),
            ("lambda_b", self.lambda_b),
            ("g2_aa", self.g2_aa),
            ("g2_bb", self.g2_bb),
        ];
        for (name, value) in nonneg {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ModelError::InvalidParameter { name, value });
            }
        }
        for (name, value) in [("eta_x", self.eta_x), ("eta_y", self.eta_y)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ModelError::InvalidParameter { name, value });
            }
        }
        Ok(())
    }

    pub fn write_noise(&self) -> Result<NoiseLaw, ModelError> {
        NoiseLaw::from_moments(self.lambda_a, self.g2_aa)
    }

    pub fn read_noise(&self) -> Result<NoiseLaw, ModelError> {
        NoiseLaw::from_moments(self.lambda_b, self.g2_bb)
    }

    /// `P(A = 1)/P(A = 0)` of the write noise; equals `λ_A` for Poissonian
    /// noise.
    fn herald_noise_ratio(&self) -> Result<f64, ModelError> {
        if self.g2_aa == 1.0 {
            return Ok(self.lambda_a);
        }
        Ok(self.write_noise()?.single_to_vacuum_ratio())
    }
}

/// Joint generating function `G_{W,R}(s, t)`.
pub fn joint_pgf_eval(params: &ModelParams, s: f64, t: f64) -> Result<f64, ModelError> {
    params.validate()?;
    for (name, value) in [("s", s), ("t", t)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(ModelError::OutOfDomain { name, value });
        }
    }
    let sd = 1.0 + params.eta_x * (s - 1.0);
    let td = 1.0 + params.eta_y * (t - 1.0);
    let pairs = 1.0 / (1.0 + params.mu * (1.0 - sd * td));
    Ok(pairs * params.write_noise()?.pgf(s) * params.read_noise()?.pgf(t))
}

/// `(⟨n_W⟩, ⟨n_R⟩)`.
pub fn mean_counts(params: &ModelParams) -> (f64, f64) {
    (
        params.eta_x * params.mu + params.lambda_a,
        params.eta_y * params.mu + params.lambda_b,
    )
}

/// Normalised write-read cross-correlation `⟨WR⟩ / (⟨W⟩⟨R⟩)`.
pub fn g2_cross(params: &ModelParams) -> Result<f64, ModelError> {
    params.validate()?;
    let ModelParams {
        mu,
        lambda_a: la,
        lambda_b: lb,
        eta_x: ex,
        eta_y: ey,
        ..
    } = *params;
    let (n_w, n_r) = mean_counts(params);
    if n_w == 0.0 || n_r == 0.0 {
        return Err(ModelError::UndefinedCorrelation);
    }
    if ex == 0.0 || ey == 0.0 {
        return Ok(1.0);
    }
    // Noise in units of the detection efficiency, so that the efficiencies
    // drop out exactly when there is no noise.
    let (ra, rb) = (la / ex, lb / ey);
    Ok(1.0 + (mu * mu + mu) / (mu * mu + mu * (ra + rb) + ra * rb))
}

/// Derivatives of the un-normalised conditional generator of `Y` given one
/// write click, evaluated at `t = 1`: `(f, f', f'')`.
///
/// `f(u) = η_X μ u / D(u)² + r / D(u)` with `D(u) = 1 + μ − μ(1 − η_X)u` and
/// `r = P(A=1)/P(A=0)`. The first term is a herald from a detected pair, the
/// second a noise herald with the pair photon lost.
fn herald_generator(params: &ModelParams) -> Result<(f64, f64, f64), ModelError> {
    params.validate()?;
    let mu = params.mu;
    let ex = params.eta_x;
    let r = params.herald_noise_ratio()?;
    let a = mu * (1.0 - ex);
    let d = 1.0 + ex * mu;
    let f0 = ex * mu / (d * d) + r / d;
    if f0 <= 0.0 {
        return Err(ModelError::DegenerateConditioning);
    }
    let f1 = ex * mu / (d * d) + 2.0 * a * ex * mu / d.powi(3) + r * a / (d * d);
    let f2 = 4.0 * a * ex * mu / d.powi(3) + 6.0 * a * a * ex * mu / d.powi(4)
        + 2.0 * r * a * a / d.powi(3);
    Ok((f0, f1, f2))
}

/// Conditional mean excitation number `μ̃ = E(Y | W = 1)` (before read
/// detection).
pub fn conditional_read_mean(params: &ModelParams) -> Result<f64, ModelError> {
    let (f0, f1, _) = herald_generator(params)?;
    Ok(f1 / f0)
}

/// `g²_{YY|W=1}` for an arbitrary write-noise law.
pub fn g2_heralded_excitation(params: &ModelParams) -> Result<f64, ModelError> {
    let (f0, f1, f2) = herald_generator(params)?;
    if f1 == 0.0 {
        return Err(ModelError::ZeroDivisor("g2_heralded_excitation"));
    }
    Ok(f2 * f0 / (f1 * f1))
}

/// `g²_{YY|W=1}(μ, η_X, λ_A)` written out for Poissonian write noise.
pub fn g2_heralded_excitation_poisson(mu: f64, eta_x: f64, lambda_a: f64) -> f64 {
    let (m, e, l) = (mu, eta_x, lambda_a);
    let num = -(2.0
        * (e - 1.0)
        * (l + e * m + l * e * m)
        * (l + 2.0 * e - l * e + 3.0 * e * m - e * e * m + l * e * m - l * e * e * m));
    let den = l + e - l * e + 2.0 * e * m - e * e * m + l * e * m - l * e * e * m;
    num / (den * den)
}

/// Conditional auto-correlation of the detected read field given one write
/// click, `g²_{RR|W=1}`.
pub fn g2_conditional_auto(params: &ModelParams) -> Result<f64, ModelError> {
    let mu_t = conditional_read_mean(params)?;
    let g2_yy = if mu_t > 0.0 {
        g2_heralded_excitation(params)?
    } else {
        0.0
    };
    let sig = params.eta_y * mu_t;
    let lb = params.lambda_b;
    let den = (sig + lb).powi(2);
    if den == 0.0 {
        return Err(ModelError::ZeroDivisor("g2_conditional_auto"));
    }
    Ok((sig * sig * g2_yy + lb * lb * params.g2_bb + 2.0 * sig * lb) / den)
}

/// Noise-free retrieval efficiency `η_R = η_Y μ̃`.
pub fn retrieval_efficiency_model(params: &ModelParams) -> Result<f64, ModelError> {
    Ok(params.eta_y * conditional_read_mean(params)?)
}

/// g² of a thermal (g² = 2) signal mixed with independent noise.
pub fn g2_unconditional(mean_signal: f64, mean_noise: f64, g2_noise: f64) -> Result<f64, ModelError> {
    let total = mean_signal + mean_noise;
    if total <= 0.0 {
        return Err(ModelError::ZeroDivisor("g2_unconditional"));
    }
    let ms = mean_signal;
    let mn = mean_noise;
    Ok((2.0 * ms * ms + 2.0 * ms * mn + g2_noise * mn * mn) / (total * total))
}

/// Unconditional g² of the write channel.
pub fn g2_write_marginal(params: &ModelParams) -> Result<f64, ModelError> {
    g2_unconditional(params.eta_x * params.mu, params.lambda_a, params.g2_aa)
}

/// Unconditional g² of the read channel.
pub fn g2_read_marginal(params: &ModelParams) -> Result<f64, ModelError> {
    g2_unconditional(params.eta_y * params.mu, params.lambda_b, params.g2_bb)
}

/// Cauchy-Schwarz parameter `g²_WR² / (g²_WW g²_RR)`; above 1 for
/// non-classical correlations.
pub fn cauchy_schwarz_parameter(g2_wr: f64, g2_ww: f64, g2_rr: f64) -> Result<f64, ModelError> {
    if g2_ww <= 0.0 || g2_rr <= 0.0 {
        return Err(ModelError::ZeroDivisor("cauchy_schwarz_parameter"));
    }
    Ok(g2_wr * g2_wr / (g2_ww * g2_rr))
}
