use serde::{Deserialize, Serialize};

use super::curves::check_points;
use super::{CurvePoint, FitError, FitReport};
use crate::measured::Measured;
use crate::pgf::WriteNoiseLine;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseLineFit {
    pub offset: Measured,
    pub slope: Measured,
    pub covariance: [[f64; 2]; 2],
    pub chi2: f64,
    pub residuals: Vec<f64>,
}

impl NoiseLineFit {
    /// The fitted line; fails if the offset or slope came out negative.
    pub fn line(&self) -> Result<WriteNoiseLine, FitError> {
        Ok(WriteNoiseLine::new(self.offset.value, self.slope.value)?)
    }

    pub fn report(&self) -> FitReport {
        let c = &self.covariance;
        FitReport::new(
            "noise_line",
            &["offset", "slope"],
            &[self.offset.value, self.slope.value],
            &nalgebra::DMatrix::from_row_slice(2, 2, &[c[0][0], c[0][1], c[1][0], c[1][1]]),
            self.chi2,
            self.residuals.clone(),
        )
    }
}

/// Weighted straight-line fit of write noise `λ_A` against `⟨n_W⟩`.
pub fn fit_noise_line(points: &[CurvePoint]) -> Result<NoiseLineFit, FitError> {
    if points.len() < 2 {
        return Err(FitError::InvalidInput("a line needs at least two points".into()));
    }
    check_points(points)?;
    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let w = 1.0 / (p.err * p.err);
        s += w;
        sx += w * p.x;
        sy += w * p.y;
        sxx += w * p.x * p.x;
        sxy += w * p.x * p.y;
    }
    // Centred form for numerical stability.
    let xm = sx / s;
    let sxx_c = sxx - sx * xm;
    if !(sxx_c > 1e-14 * sxx.abs().max(f64::MIN_POSITIVE)) {
        return Err(FitError::InvalidInput("abscissae are degenerate".into()));
    }
    let slope = (sxy - sx * sy / s) / sxx_c;
    let offset = (sy - slope * sx) / s;
    let var_slope = 1.0 / sxx_c;
    let var_offset = 1.0 / s + xm * xm / sxx_c;
    let cov = -xm / sxx_c;
    let residuals: Vec<f64> = points
        .iter()
        .map(|p| (p.y - offset - slope * p.x) / p.err)
        .collect();
    Ok(NoiseLineFit {
        offset: Measured::new(offset, var_offset.sqrt()),
        slope: Measured::new(slope, var_slope.sqrt()),
        covariance: [[var_offset, cov], [cov, var_slope]],
        chi2: residuals.iter().map(|r| r * r).sum(),
        residuals,
    })
}
