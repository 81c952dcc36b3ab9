use serde::{Deserialize, Serialize};

use super::curves::check_points;
use super::lm::{levenberg_marquardt, LmOptions, Problem};
use super::{CurvePoint, FitError, FitReport};
use crate::measured::Measured;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    /// `B·exp(−t/τ) + 1`, for cross-correlations.
    G2Offset1,
    /// `B·exp(−t/τ)`, for retrieval efficiencies.
    PlainExp,
}

impl DecayModel {
    pub fn baseline(self) -> f64 {
        match self {
            Self::G2Offset1 => 1.0,
            Self::PlainExp => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFitResult {
    pub model: DecayModel,
    pub amplitude: Measured,
    pub tau_us: Measured,
    pub baseline: f64,
    /// Covariance of `(B, τ)`.
    pub covariance: [[f64; 2]; 2],
    pub chi2: f64,
    pub residuals: Vec<f64>,
}

impl DecayFitResult {
    pub fn eval(&self, t_us: f64) -> f64 {
        self.amplitude.value * (-t_us / self.tau_us.value).exp() + self.baseline
    }

    pub fn report(&self) -> FitReport {
        let c = &self.covariance;
        FitReport::new(
            match self.model {
                DecayModel::G2Offset1 => "decay_g2_offset1",
                DecayModel::PlainExp => "decay_plain_exp",
            },
            &["amplitude", "tau_us"],
            &[self.amplitude.value, self.tau_us.value],
            &nalgebra::DMatrix::from_row_slice(2, 2, &[c[0][0], c[0][1], c[1][0], c[1][1]]),
            self.chi2,
            self.residuals.clone(),
        )
    }
}

/// Weighted log-linear regression of `ln(y − baseline)` for the seed.
fn log_linear_seed(points: &[CurvePoint], baseline: f64) -> Option<(f64, f64)> {
    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut used = 0;
    for p in points {
        let d = p.y - baseline;
        if d <= 0.0 {
            continue;
        }
        let w = (d / p.err).powi(2);
        let ly = d.ln();
        s += w;
        sx += w * p.x;
        sy += w * ly;
        sxx += w * p.x * p.x;
        sxy += w * p.x * ly;
        used += 1;
    }
    if used < 2 {
        return None;
    }
    let det = s * sxx - sx * sx;
    if det <= 0.0 {
        return None;
    }
    let slope = (s * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / s;
    let span = points.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max)
        - points.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let tau = if slope < 0.0 { -1.0 / slope } else { 10.0 * span.max(1.0) };
    Some((intercept.exp(), tau))
}

/// Exponential decay fit with fixed baseline.
pub fn fit_memory_decay(points: &[CurvePoint], model: DecayModel) -> Result<DecayFitResult, FitError> {
    if points.len() < 3 {
        return Err(FitError::InvalidInput("a decay fit needs at least three delays".into()));
    }
    check_points(points)?;
    let base = model.baseline();
    let unidentifiable = || FitError::Unidentifiable {
        parameter: "tau_us".into(),
    };
    let (b0, tau0) = log_linear_seed(points, base).ok_or_else(unidentifiable)?;
    let names = ["amplitude", "tau_us"];
    let residual = |p: &[f64]| -> Vec<f64> {
        points
            .iter()
            .map(|q| (q.y - (p[0] * (-q.x / p[1]).exp() + base)) / q.err)
            .collect()
    };
    let problem = Problem::bounded(
        &names,
        vec![b0, tau0],
        vec![0.0, 1e-9 * tau0],
        vec![f64::INFINITY, f64::INFINITY],
    );
    let res = levenberg_marquardt(residual, &problem, &LmOptions::default())?;
    if res.params[0] <= 0.0 {
        return Err(unidentifiable());
    }
    let cov = &res.covariance;
    let errs = res.std_errs();
    Ok(DecayFitResult {
        model,
        amplitude: Measured::new(res.params[0], errs[0]),
        tau_us: Measured::new(res.params[1], errs[1]),
        baseline: base,
        covariance: [[cov[(0, 0)], cov[(0, 1)]], [cov[(1, 0)], cov[(1, 1)]]],
        chi2: res.chi2,
        residuals: res.residuals,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub time_us: f64,
    pub std_err: f64,
    /// Level of the fitted curve at the crossing.
    pub level: f64,
}

/// Delay at which the fitted curve drops to `threshold`. With
/// `combine = Some((g²_WW, g²_RR))` the delay where the Cauchy-Schwarz
/// parameter `g(t)² / (g²_WW g²_RR)` reaches `threshold` instead.
pub fn threshold_crossing(
    fit: &DecayFitResult,
    threshold: f64,
    combine: Option<(f64, f64)>,
) -> Result<Crossing, FitError> {
    let level = match combine {
        Some((ww, rr)) => {
            if !(ww > 0.0 && rr > 0.0 && threshold > 0.0) {
                return Err(FitError::InvalidInput(
                    "Cauchy-Schwarz threshold needs positive auto-correlations".into(),
                ));
            }
            (threshold * ww * rr).sqrt()
        }
        None => threshold,
    };
    let above = level - fit.baseline;
    if !(above > 0.0) {
        return Err(FitError::NoCrossing { threshold });
    }
    let (b, tau) = (fit.amplitude.value, fit.tau_us.value);
    let ratio = b / above;
    if ratio <= 1.0 {
        return Err(FitError::AtBoundary { threshold });
    }
    let log = ratio.ln();
    let t = tau * log;
    // ∂t/∂B = τ/B, ∂t/∂τ = ln(B/(level − baseline)).
    let g = [tau / b, log];
    let c = &fit.covariance;
    let var = g[0] * g[0] * c[0][0] + 2.0 * g[0] * g[1] * c[0][1] + g[1] * g[1] * c[1][1];
    Ok(Crossing {
        time_us: t,
        std_err: var.max(0.0).sqrt(),
        level,
    })
}
