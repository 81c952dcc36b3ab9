use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use super::config::{read_toml, AnalyzeConfig, Manifest};
use super::{write_file, write_json, CliError, CommonArgs, Format};
use crate::dataset::{ClickDataset, SCHEMA_VERSION};
use crate::estimate::{
    histogram_time_tags, Channel, Conditioning, CorrelationResult, EstimateError, Moments, Selection, Statistic,
};
use crate::fit::{write_curve_csv, CurvePoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum HistogramConditioning {
    WritePulse,
    Herald,
    NoWrite,
    All,
}

impl From<HistogramConditioning> for Conditioning {
    fn from(c: HistogramConditioning) -> Self {
        match c {
            HistogramConditioning::WritePulse => Self::WritePulse,
            HistogramConditioning::Herald => Self::Herald,
            HistogramConditioning::NoWrite => Self::NoWrite,
            HistogramConditioning::All => Self::All,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Unavailable {
    pub statistic: Statistic,
    pub reason: String,
}

/// All statistics of one `(delay, window)` selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisBlock {
    pub delay_us: f64,
    pub window_us: Option<f64>,
    pub results: Vec<CorrelationResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unavailable: Vec<Unavailable>,
}

impl AnalysisBlock {
    pub fn get(&self, statistic: Statistic) -> Option<&CorrelationResult> {
        self.results.iter().find(|r| r.statistic == statistic)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetAnalysis {
    pub file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    pub n_sequences: u64,
    pub blocks: Vec<AnalysisBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub datasets: Vec<DatasetAnalysis>,
}

/// Every estimator at every delay of `data` for the full pulse and each of
/// `windows`. Statistics that cannot be formed (e.g. heralded quantities of
/// a noise-only dataset) are listed with the reason.
pub fn analyze_dataset(data: &ClickDataset, windows: &[f64]) -> Result<Vec<AnalysisBlock>, EstimateError> {
    let mut selections: Vec<Option<f64>> = vec![None];
    selections.extend(windows.iter().map(|&w| Some(w)));
    let mut out = Vec::new();
    for delay in data.delays() {
        for &window_us in &selections {
            let m = Moments::from_dataset(
                data,
                Selection {
                    delay_us: Some(delay),
                    window_us,
                },
            )?;
            let mut block = AnalysisBlock {
                delay_us: delay,
                window_us,
                results: Vec::new(),
                unavailable: Vec::new(),
            };
            let stats: [(Statistic, Result<CorrelationResult, EstimateError>); 10] = [
                (Statistic::MeanWrite, m.mean_write()),
                (Statistic::MeanRead, m.mean_read()),
                (Statistic::MeanReadNoise, m.mean_read_noise()),
                (Statistic::G2Cross, m.g2_cross()),
                (Statistic::G2Conditional, m.g2_conditional()),
                (Statistic::RetrievalEfficiency, m.retrieval_efficiency()),
                (Statistic::G2Write, m.g2_unconditional(Channel::Write)),
                (Statistic::G2Read, m.g2_unconditional(Channel::Read)),
                (Statistic::G2ReadNoise, m.g2_read_noise()),
                (Statistic::CauchySchwarz, m.cauchy_schwarz()),
            ];
            for (statistic, r) in stats {
                match r {
                    Ok(r) => block.results.push(r),
                    Err(e) => block.unavailable.push(Unavailable {
                        statistic,
                        reason: e.to_string(),
                    }),
                }
            }
            out.push(block);
        }
    }
    Ok(out)
}

fn load_dataset(path: &Path, read_pulse_us: f64) -> Result<ClickDataset, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let reader = BufReader::new(file);
    let data = match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => ClickDataset::read_csv(reader, read_pulse_us)?,
        _ => ClickDataset::read_jsonl(reader, read_pulse_us)?,
    };
    Ok(data)
}

fn stat_name(s: Statistic) -> String {
    serde_json::to_value(s)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn results_csv(report: &AnalysisReport) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Data(e.to_string());
    w.write_record([
        "file",
        "delay_us",
        "window_us",
        "statistic",
        "value",
        "std_err",
        "n_sequences_used",
        "conditioning",
    ])
    .map_err(csv_err)?;
    for d in &report.datasets {
        for b in &d.blocks {
            for r in &b.results {
                w.write_record([
                    d.file.clone(),
                    b.delay_us.to_string(),
                    b.window_us.map(|v| v.to_string()).unwrap_or_default(),
                    stat_name(r.statistic),
                    r.value.to_string(),
                    r.std_err.to_string(),
                    r.n_sequences_used.to_string(),
                    r.conditioning.clone(),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.into_inner().map_err(|e| CliError::Data(e.to_string()))
}

/// Blocks of the first requested window (full pulse when none).
fn curve_blocks(d: &DatasetAnalysis, window: Option<f64>) -> impl Iterator<Item = &AnalysisBlock> {
    d.blocks.iter().filter(move |b| b.window_us == window)
}

fn decay_curve(d: &DatasetAnalysis, window: Option<f64>, stat: Statistic) -> Vec<CurvePoint> {
    curve_blocks(d, window)
        .filter_map(|b| b.get(stat))
        .filter(|r| r.std_err > 0.0)
        .map(|r| CurvePoint::new(r.delay_us.unwrap_or(0.0), r.value, r.std_err))
        .collect()
}

fn write_curves(out_dir: &Path, report: &AnalysisReport, window: Option<f64>) -> Result<(), CliError> {
    let write = |name: &str, pts: &[CurvePoint]| -> Result<(), CliError> {
        let mut buf = Vec::new();
        write_curve_csv(pts, &mut buf)?;
        write_file(&out_dir.join(name), &buf)
    };
    if let Some(first) = report.datasets.first() {
        if curve_blocks(first, window).count() > 1 {
            write("decay_g2_cross.csv", &decay_curve(first, window, Statistic::G2Cross))?;
            write(
                "decay_retrieval_efficiency.csv",
                &decay_curve(first, window, Statistic::RetrievalEfficiency),
            )?;
            write("decay_cauchy_schwarz.csv", &decay_curve(first, window, Statistic::CauchySchwarz))?;
        }
    }
    if report.datasets.len() > 1 {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| CliError::Data(e.to_string());
        w.write_record(["n_w", "g2_wr", "g2_wr_err", "eta_r", "eta_r_err", "n_r", "n_r_err"])
            .map_err(csv_err)?;
        let field = |b: &AnalysisBlock, s: Statistic| -> [String; 2] {
            match b.get(s) {
                Some(r) if r.std_err > 0.0 => [r.value.to_string(), r.std_err.to_string()],
                _ => [String::new(), String::new()],
            }
        };
        for d in &report.datasets {
            let Some(b) = curve_blocks(d, window).next() else {
                continue;
            };
            let Some(n_w) = b.get(Statistic::MeanWrite) else {
                continue;
            };
            let [g, ge] = field(b, Statistic::G2Cross);
            let [e, ee] = field(b, Statistic::RetrievalEfficiency);
            let [n, ne] = field(b, Statistic::MeanRead);
            w.write_record([n_w.value.to_string(), g, ge, e, ee, n, ne]).map_err(csv_err)?;
        }
        let buf = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
        write_file(&out_dir.join("efficiency_curves.csv"), &buf)?;
    }
    Ok(())
}

pub(super) fn run(
    common: &CommonArgs,
    input: &Path,
    windows: Vec<f64>,
    read_pulse: Option<f64>,
    histogram: Option<f64>,
    conditioning: HistogramConditioning,
) -> Result<(), CliError> {
    let mut cfg = match &common.config {
        Some(p) => read_toml::<AnalyzeConfig>(p)?,
        None => AnalyzeConfig::default(),
    };
    if !windows.is_empty() {
        cfg.windows_us = windows;
    }
    cfg.read_pulse_us = read_pulse.or(cfg.read_pulse_us);
    cfg.histogram_bin_us = histogram.or(cfg.histogram_bin_us);
    if let Some(w) = cfg.windows_us.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(CliError::Usage(format!("invalid read window {w}")));
    }

    let is_manifest = input.extension().is_some_and(|e| e == "json");
    let jobs: Vec<(PathBuf, String, Option<f64>, f64)> = if is_manifest {
        let manifest = Manifest::load(input)?;
        if manifest.schema_version != SCHEMA_VERSION {
            return Err(CliError::Data(format!(
                "manifest schema version {} is not {SCHEMA_VERSION}",
                manifest.schema_version
            )));
        }
        let dir = input.parent().unwrap_or(Path::new("."));
        manifest
            .datasets
            .iter()
            .map(|e| (dir.join(&e.file), e.file.clone(), Some(e.model.mu), e.metadata.read_pulse_us))
            .collect()
    } else {
        let name = input.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        vec![(input.to_path_buf(), name, None, cfg.read_pulse_us.unwrap_or(130.0))]
    };

    let mut report = AnalysisReport {
        schema_version: SCHEMA_VERSION,
        datasets: Vec::new(),
    };
    for (i, (path, file, mu, pulse)) in jobs.iter().enumerate() {
        let data = load_dataset(path, *pulse)?;
        if let Some(bin) = cfg.histogram_bin_us {
            let h = histogram_time_tags(&data, bin, conditioning.into(), None)?;
            let name = if jobs.len() == 1 {
                "histogram.csv".to_string()
            } else {
                format!("histogram_{i:03}.csv")
            };
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| CliError::Data(e.to_string());
            w.write_record(["t_us", "counts", "rate"]).map_err(csv_err)?;
            for k in 0..h.counts.len() {
                w.write_record([h.edges_us[k].to_string(), h.counts[k].to_string(), h.rates[k].to_string()])
                    .map_err(csv_err)?;
            }
            let buf = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
            write_file(&common.out_dir.join(name), &buf)?;
        }
        report.datasets.push(DatasetAnalysis {
            file: file.clone(),
            mu: *mu,
            n_sequences: data.len() as u64,
            blocks: analyze_dataset(&data, &cfg.windows_us)?,
        });
    }
    match common.format {
        Format::Json => write_json(&common.out_dir.join("results.json"), &report)?,
        Format::Csv => write_file(&common.out_dir.join("results.csv"), &results_csv(&report)?)?,
    }
    write_curves(&common.out_dir, &report, cfg.windows_us.first().copied())
}
