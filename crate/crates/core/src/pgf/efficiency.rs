use serde::{Deserialize, Serialize};

use super::ModelError;

/// Write noise as an affine function of the mean write counts:
/// `λ_A = offset + slope·⟨n_W⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WriteNoiseLine {
    pub offset: f64,
    pub slope: f64,
}

impl WriteNoiseLine {
    pub fn new(offset: f64, slope: f64) -> Result<Self, ModelError> {
        let line = Self { offset, slope };
        line.validate()?;
        Ok(line)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.offset.is_finite() && self.offset >= 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "offset",
                value: self.offset,
            });
        }
        if !(self.slope.is_finite() && self.slope >= 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "slope",
                value: self.slope,
            });
        }
        Ok(())
    }

    pub fn noise_at(&self, mean_write_counts: f64) -> f64 {
        self.offset + self.slope * mean_write_counts
    }

    /// Self-consistent `⟨n_W⟩` for a detected write signal `η_X μ`.
    pub fn mean_write_counts(&self, detected_signal: f64) -> Result<f64, ModelError> {
        if self.slope >= 1.0 {
            return Err(ModelError::InvalidParameter {
                name: "slope",
                value: self.slope,
            });
        }
        Ok((detected_signal + self.offset) / (1.0 - self.slope))
    }
}

/// Losses between a stored excitation and a read detection event:
/// `η_Y = η_d · η_esc(T_cell, R) · η*_R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyChain {
    pub t_cell: f64,
    pub r_mirror: f64,
    pub eta_d: f64,
    pub eta_r_star: f64,
}

impl EfficiencyChain {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in [
            ("t_cell", self.t_cell),
            ("r_mirror", self.r_mirror),
            ("eta_d", self.eta_d),
            ("eta_r_star", self.eta_r_star),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ModelError::InvalidParameter { name, value });
            }
        }
        Ok(())
    }

    pub fn escape(&self) -> Result<f64, ModelError> {
        escape_efficiency(self.t_cell, self.r_mirror)
    }

    pub fn eta_y(&self) -> Result<f64, ModelError> {
        self.validate()?;
        Ok(self.eta_d * self.escape()? * self.eta_r_star)
    }

    pub fn is_consistent_with(&self, eta_y: f64, tolerance: f64) -> Result<bool, ModelError> {
        Ok((self.eta_y()? - eta_y).abs() <= tolerance)
    }
}

/// Probability that a photon generated inside the cell cavity leaves through
/// the output coupler: `T(1 − R) / (1 − R T²)`.
pub fn escape_efficiency(t_cell: f64, r_mirror: f64) -> Result<f64, ModelError> {
    for (name, value) in [("t_cell", t_cell), ("r_mirror", r_mirror)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(ModelError::InvalidParameter { name, value });
        }
    }
    let den = 1.0 - r_mirror * t_cell * t_cell;
    if den <= 0.0 {
        return Err(ModelError::SingularCavity);
    }
    Ok(t_cell * (1.0 - r_mirror) / den)
}

/// `p₀ = ⟨n_exc⟩ / (1 + ⟨n_exc⟩)`.
pub fn excitation_probability(n_exc_mean: f64) -> Result<f64, ModelError> {
    if !(n_exc_mean.is_finite() && n_exc_mean >= 0.0) {
        return Err(ModelError::InvalidParameter {
            name: "n_exc_mean",
            value: n_exc_mean,
        });
    }
    Ok(n_exc_mean / (1.0 + n_exc_mean))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcitationEstimate {
    pub p0: f64,
    /// False when the write noise exceeds 10 % of the write counts or the
    /// excitation probability is not small, i.e. outside the regime where
    /// `p₀ ≈ ⟨n_W⟩/η_X` holds.
    pub approximation_valid: bool,
}

/// Low-excitation estimate `p₀ ≈ ⟨n_W⟩ / η_X`. `lambda_a` is only used to
/// flag the approximation.
pub fn p0_from_counts(
    n_w_mean: f64,
    eta_x: f64,
    lambda_a: f64,
) -> Result<ExcitationEstimate, ModelError> {
    if eta_x <= 0.0 {
        return Err(ModelError::ZeroDivisor("p0_from_counts"));
    }
    let p0 = n_w_mean / eta_x;
    let noisy = n_w_mean > 0.0 && lambda_a / n_w_mean > 0.1;
    Ok(ExcitationEstimate {
        p0,
        approximation_valid: !noisy && p0 < 0.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn escape_examples() {
        assert_eq!(escape_efficiency(1.0, 0.7).unwrap(), 1.0);
        assert_eq!(escape_efficiency(0.83, 0.0).unwrap(), 0.83);
        assert_eq!(escape_efficiency(1.0, 1.0), Err(ModelError::SingularCavity));
        let e = escape_efficiency(0.9, 0.5).unwrap();
        assert!((0.0..=1.0).contains(&e));
    }

    #[test]
    fn excitation_probability_examples() {
        assert_eq!(excitation_probability(1.0).unwrap(), 0.5);
        assert_eq!(excitation_probability(0.0).unwrap(), 0.0);
    }

    #[test]
    fn p0_low_excitation_estimate() {
        let est = p0_from_counts(0.00058, 0.029, 0.0).unwrap();
        assert_relative_eq!(est.p0, 0.02, max_relative = 1e-12);
        assert!(est.approximation_valid);
        // Exact value for the same pair mean.
        let exact = excitation_probability(0.0204).unwrap();
        assert!((exact - est.p0).abs() < 1e-3);
        let noisy = p0_from_counts(0.00058, 0.029, 0.0001).unwrap();
        assert!(!noisy.approximation_valid);
    }

    #[test]
    fn noise_line_self_consistency() {
        let line = WriteNoiseLine::new(6e-5, 0.08).unwrap();
        let n_w = line.mean_write_counts(5.8e-4).unwrap();
        assert_relative_eq!(n_w, 5.8e-4 + line.noise_at(n_w), max_relative = 1e-14);
        assert!(WriteNoiseLine::new(-1e-3, 0.0).is_err());
    }

    #[test]
    fn chain_product() {
        let chain = EfficiencyChain {
            t_cell: 1.0,
            r_mirror: 0.3,
            eta_d: 0.19,
            eta_r_star: 0.7,
        };
        assert_relative_eq!(chain.eta_y().unwrap(), 0.19 * 0.7, max_relative = 1e-15);
        assert!(chain.is_consistent_with(0.133, 1e-12).unwrap());
    }
}
