//! Least-squares fits of spectra, noise lines, decays and detection
//! efficiencies.

mod curves;
mod decay;
mod efficiency;
mod line;
pub mod lm;
mod spectrum;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use curves::{read_curve_csv, write_curve_csv, CurvePoint};
pub use decay::{fit_memory_decay, threshold_crossing, Crossing, DecayFitResult, DecayModel};
pub use efficiency::{
    fit_detection_efficiencies, intrinsic_retrieval, intrinsic_retrieval_from_chain,
    predict_curves, read_efficiency_csv, EfficiencyCurves, EfficiencyFit, EfficiencyPoint,
    NoiseCalibration,
};
pub use line::{fit_noise_line, NoiseLineFit};
pub use spectrum::{
    fit_read_spectrum, fit_write_spectrum, lorentzian, read_spectrum_csv, read_spectrum_model,
    write_efficiency, write_spectrum_model, ReadSpectrumParams, SpectralFitResult, SpectrumKind,
    SpectrumScan, WriteSpectrumParams, DEFAULT_LARMOR_MHZ,
};

use crate::pgf::ModelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("invalid fit input: {0}")]
    InvalidInput(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("optimiser did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("parameter {parameter} is not identifiable from the data")]
    Unidentifiable { parameter: String },
    #[error("model evaluated to a non-finite value")]
    NonFinite,
    #[error("fitted curve never crosses {threshold}")]
    NoCrossing { threshold: f64 },
    #[error("fitted curve crosses {threshold} at or before zero delay")]
    AtBoundary { threshold: f64 },
    #[error("degenerate denominator in {0}")]
    ZeroDivisor(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Named parameter with standard error, as written to fit reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitParameter {
    pub name: String,
    pub value: f64,
    pub std_err: f64,
}

/// Serialised form of every fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub kind: String,
    pub parameters: Vec<FitParameter>,
    pub covariance: Vec<Vec<f64>>,
    pub chi2: f64,
    pub dof: usize,
    pub reduced_chi2: f64,
    /// Weighted residuals `(data − model)/σ`.
    pub residuals: Vec<f64>,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub derived: serde_json::Map<String, serde_json::Value>,
}

impl FitReport {
    pub(crate) fn new(
        kind: &str,
        names: &[&str],
        values: &[f64],
        covariance: &nalgebra::DMatrix<f64>,
        chi2: f64,
        residuals: Vec<f64>,
    ) -> Self {
        let n = values.len();
        let dof = residuals.len().saturating_sub(n);
        Self {
            schema_version: crate::dataset::SCHEMA_VERSION,
            kind: kind.to_string(),
            parameters: names
                .iter()
                .zip(values)
                .enumerate()
                .map(|(i, (name, value))| FitParameter {
                    name: name.to_string(),
                    value: *value,
                    std_err: covariance[(i, i)].max(0.0).sqrt(),
                })
                .collect(),
            covariance: (0..n)
                .map(|i| (0..n).map(|j| covariance[(i, j)]).collect())
                .collect(),
            chi2,
            dof,
            reduced_chi2: if dof > 0 { chi2 / dof as f64 } else { f64::NAN },
            residuals,
            derived: serde_json::Map::new(),
        }
    }

    pub fn parameter(&self, name: &str) -> Option<&FitParameter> {
        self.parameters.iter().find(|p| p.name == name)
    }
}
