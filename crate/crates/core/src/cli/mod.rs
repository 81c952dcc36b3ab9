//! The `dlcz` command line: `simulate`, `analyze`, `fit` and `magic`.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

mod analyze;
pub mod config;
mod fit;
mod magic;
mod simulate;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::atomic::AtomicError;
use crate::dataset::DatasetError;
use crate::estimate::EstimateError;
use crate::fit::FitError;
use crate::pgf::ModelError;
use crate::sim::SimError;

pub use analyze::{analyze_dataset, AnalysisBlock, AnalysisReport, DatasetAnalysis};
pub use config::{AnalyzeConfig, CalibrationFile, FitConfig, Manifest, ManifestEntry, SimulateConfig, Sweep};
pub use fit::FitKind;
pub use simulate::{build_configs, DATASET_STEM};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Data(_) => 3,
            Self::Numerical(_) => 4,
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        Self::Data(format!("{}: {e}", path.display()))
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<EstimateError> for CliError {
    fn from(e: EstimateError) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        Self::Usage(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Dataset(d) => d.into(),
            other => Self::Usage(other.to_string()),
        }
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::InvalidInput(_) | FitError::Parse { .. } => Self::Data(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

impl From<AtomicError> for CliError {
    fn from(e: AtomicError) -> Self {
        match e {
            AtomicError::EmptyRange { .. } => Self::Usage(e.to_string()),
            AtomicError::InvalidScheme(_) | AtomicError::SchemeParse { .. } => Self::Data(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Data(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, Args)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// RNG seed; overrides the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "DLCZ_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Format of the main output table.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Parser)]
#[command(name = "dlcz", version, about = "Heralded single-photon source with built-in memory")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate click records (writes the dataset files and manifest.json).
    Simulate,
    /// Estimate correlations from a dataset or a simulation manifest.
    Analyze {
        /// manifest.json, or a dataset in .jsonl or .csv
        input: PathBuf,
        /// Read window in µs (repeatable); the full pulse is always included.
        #[arg(long = "window")]
        windows: Vec<f64>,
        /// Read pulse length of a bare dataset, µs.
        #[arg(long)]
        read_pulse: Option<f64>,
        /// Also emit a time-tag histogram with this bin width, µs.
        #[arg(long)]
        histogram: Option<f64>,
        /// Sequences entering the histogram.
        #[arg(long, value_enum, default_value_t = analyze::HistogramConditioning::WritePulse)]
        conditioning: analyze::HistogramConditioning,
    },
    /// Fit a model to curve or scan data.
    Fit {
        #[arg(value_enum)]
        kind: FitKind,
        /// Input data, CSV or JSON.
        input: PathBuf,
        /// Larmor frequency of the spectra, MHz.
        #[arg(long)]
        larmor: Option<f64>,
        /// Decay model: baseline 1 (g2-offset1) or 0 (plain-exp).
        #[arg(long, value_enum)]
        model: Option<fit::DecayModelArg>,
        /// Crossing threshold of the decay curve (repeatable).
        #[arg(long = "threshold")]
        thresholds: Vec<f64>,
        /// Averaged g²_WW and g²_RR for the Cauchy-Schwarz crossing.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        averages: Option<Vec<f64>>,
        /// Noise calibration (TOML) for the efficiency fit.
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
    /// Magic-detuning search and coupling table.
    Magic {
        /// Level scheme file; omit with --cesium.
        scheme: Option<PathBuf>,
        /// Use the built-in caesium D1 scheme.
        #[arg(long, conflicts_with = "scheme")]
        cesium: bool,
        /// Vapour temperature for the caesium Doppler width, °C.
        #[arg(long, default_value_t = 43.0)]
        temperature: f64,
        /// Detuning range, MHz.
        #[arg(long, num_args = 2, allow_negative_numbers = true, value_names = ["LO", "HI"])]
        range: Option<Vec<f64>>,
        /// Step of the coupling table, MHz.
        #[arg(long, default_value_t = 1.0)]
        step: f64,
    },
}

pub(crate) fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_file(path, &bytes)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let common = &cli.common;
    create_dir(&common.out_dir)?;
    match cli.command {
        Command::Simulate => simulate::run(common),
        Command::Analyze {
            input,
            windows,
            read_pulse,
            histogram,
            conditioning,
        } => analyze::run(common, &input, windows, read_pulse, histogram, conditioning),
        Command::Fit {
            kind,
            input,
            larmor,
            model,
            thresholds,
            averages,
            calibration,
        } => fit::run(
            common,
            kind,
            &input,
            fit::Overrides {
                larmor,
                model,
                thresholds,
                averages,
                calibration,
            },
        ),
        Command::Magic {
            scheme,
            cesium,
            temperature,
            range,
            step,
        } => magic::run(common, scheme.as_deref(), cesium, temperature, range, step),
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
