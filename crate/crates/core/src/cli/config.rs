//! TOML configuration files and the simulation manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::dataset::DatasetMetadata;
use crate::fit::{DecayModel, NoiseCalibration, DEFAULT_LARMOR_MHZ};
use crate::measured::Measured;
use crate::pgf::{ModelParams, WriteNoiseLine};
use crate::sim::SimConfig;

pub(crate) fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Parameter sweeps of `dlcz simulate`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    /// Delays interleaved within each dataset.
    pub delays_us: Vec<f64>,
    /// Pair means; one dataset per value.
    pub mu: Vec<f64>,
    /// Sequences without write pulse added at every delay.
    pub no_write_sequences: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    pub simulation: SimConfig,
    #[serde(default)]
    pub sweep: Sweep,
    /// When set, `λ_A` follows `⟨n_W⟩` through this line at every `μ`.
    #[serde(default)]
    pub noise_line: Option<WriteNoiseLine>,
}

/// Noise calibration and reference parameters, as in `data/calibration.toml`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub noise: NoiseCalibration,
    #[serde(default)]
    pub model: Option<ReferenceModel>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceModel {
    pub mu: f64,
    pub eta_x: f64,
    pub eta_y: f64,
}

impl CalibrationFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        read_toml(path)
    }

    /// Full model parameters at the reference pair mean.
    pub fn model_params(&self) -> Result<ModelParams, CliError> {
        let m = self
            .model
            .ok_or_else(|| CliError::Usage("calibration has no [model] section".into()))?;
        let n = &self.noise;
        Ok(ModelParams::with_noise_line(
            m.mu, m.eta_x, m.eta_y, &n.line, n.lambda_b, n.g2_bb,
        )?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicInputs {
    pub eta_d: Measured,
    pub eta_esc: Measured,
}

/// Options of `dlcz fit`; command-line flags override file values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub larmor_mhz: f64,
    pub decay_model: DecayModel,
    pub thresholds: Vec<f64>,
    /// Averaged `(g²_WW, g²_RR)` for the Cauchy-Schwarz crossing.
    pub averages: Option<(f64, f64)>,
    pub calibration: Option<NoiseCalibration>,
    pub intrinsic: Option<IntrinsicInputs>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            larmor_mhz: DEFAULT_LARMOR_MHZ,
            decay_model: DecayModel::G2Offset1,
            thresholds: Vec::new(),
            averages: None,
            calibration: None,
            intrinsic: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeConfig {
    /// Read windows in µs; the full pulse is always analysed.
    pub windows_us: Vec<f64>,
    pub read_pulse_us: Option<f64>,
    pub histogram_bin_us: Option<f64>,
}

/// One dataset written by `dlcz simulate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub n_sequences: u64,
    pub model: ModelParams,
    pub metadata: DatasetMetadata,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub format: String,
    pub config: SimulateConfig,
    pub datasets: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }
}
