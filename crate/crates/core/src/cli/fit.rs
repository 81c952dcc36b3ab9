use std::fs::File;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use super::config::{read_toml, CalibrationFile, FitConfig};
use super::{write_file, write_json, CliError, CommonArgs, Format};
use crate::fit::{
    fit_detection_efficiencies, fit_memory_decay, fit_noise_line, fit_read_spectrum, fit_write_spectrum,
    intrinsic_retrieval, predict_curves, read_curve_csv, read_efficiency_csv, read_spectrum_csv,
    read_spectrum_model, threshold_crossing, write_spectrum_model, CurvePoint, DecayFitResult, DecayModel,
    EfficiencyPoint, FitReport, ReadSpectrumParams, SpectrumScan, WriteSpectrumParams,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FitKind {
    WriteSpectrum,
    ReadSpectrum,
    NoiseLine,
    Decay,
    Efficiencies,
}

impl FitKind {
    fn stem(self) -> &'static str {
        match self {
            Self::WriteSpectrum => "write_spectrum",
            Self::ReadSpectrum => "read_spectrum",
            Self::NoiseLine => "noise_line",
            Self::Decay => "decay",
            Self::Efficiencies => "efficiencies",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DecayModelArg {
    G2Offset1,
    PlainExp,
}

pub(super) struct Overrides {
    pub larmor: Option<f64>,
    pub model: Option<DecayModelArg>,
    pub thresholds: Vec<f64>,
    pub averages: Option<Vec<f64>>,
    pub calibration: Option<PathBuf>,
}

/// One row of the plot data: `series,x,y,err,model,residual`.
struct PlotRow {
    series: &'static str,
    x: f64,
    y: f64,
    err: f64,
    model: f64,
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "json")
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| CliError::Data(format!("{}: line {}: {e}", path.display(), e.line())))
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::io(path, e))
}

fn read_curves(path: &Path) -> Result<Vec<CurvePoint>, CliError> {
    if is_json(path) {
        read_json(path)
    } else {
        Ok(read_curve_csv(open(path)?)?)
    }
}

fn plot_csv(rows: &[PlotRow]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Data(e.to_string());
    w.write_record(["series", "x", "y", "err", "model", "residual"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.series.to_string(),
            r.x.to_string(),
            r.y.to_string(),
            r.err.to_string(),
            r.model.to_string(),
            ((r.y - r.model) / r.err).to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Data(e.to_string()))
}

fn parameters_csv(report: &FitReport) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Data(e.to_string());
    w.write_record(["name", "value", "std_err"]).map_err(csv_err)?;
    for p in &report.parameters {
        w.write_record([p.name.clone(), p.value.to_string(), p.std_err.to_string()])
            .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Data(e.to_string()))
}

fn insert<T: Serialize>(report: &mut FitReport, key: &str, value: T) {
    report
        .derived
        .insert(key.to_string(), serde_json::to_value(value).unwrap_or_default());
}

fn spectrum_errors(v: &Option<Vec<f64>>, counts: &[f64]) -> Vec<f64> {
    v.clone()
        .unwrap_or_else(|| counts.iter().map(|c| c.max(1.0).sqrt()).collect())
}

fn load_scan(path: &Path, larmor: f64) -> Result<SpectrumScan, CliError> {
    if is_json(path) {
        let mut scan: SpectrumScan = read_json(path)?;
        scan.larmor_mhz = larmor;
        Ok(scan)
    } else {
        Ok(read_spectrum_csv(open(path)?, larmor)?)
    }
}

fn decay_crossings(fit: &DecayFitResult, cfg: &FitConfig) -> (Vec<serde_json::Value>, Option<String>) {
    let mut out = Vec::new();
    let mut failure = None;
    let mut requests: Vec<(f64, Option<(f64, f64)>)> = cfg.thresholds.iter().map(|&t| (t, None)).collect();
    if let Some(avg) = cfg.averages {
        requests.push((1.0, Some(avg)));
    }
    for (threshold, combine) in requests {
        let quantity = if combine.is_some() { "cauchy_schwarz" } else { "curve" };
        match threshold_crossing(fit, threshold, combine) {
            Ok(c) => out.push(json!({
                "quantity": quantity,
                "threshold": threshold,
                "time_us": c.time_us,
                "std_err": c.std_err,
                "level": c.level,
            })),
            Err(e) => {
                out.push(json!({ "quantity": quantity, "threshold": threshold, "error": e.to_string() }));
                failure.get_or_insert(e.to_string());
            }
        }
    }
    (out, failure)
}

pub(super) fn run(common: &CommonArgs, kind: FitKind, input: &Path, o: Overrides) -> Result<(), CliError> {
    let mut cfg = match &common.config {
        Some(p) => read_toml::<FitConfig>(p)?,
        None => FitConfig::default(),
    };
    if let Some(l) = o.larmor {
        cfg.larmor_mhz = l;
    }
    if let Some(m) = o.model {
        cfg.decay_model = match m {
            DecayModelArg::G2Offset1 => DecayModel::G2Offset1,
            DecayModelArg::PlainExp => DecayModel::PlainExp,
        };
    }
    if !o.thresholds.is_empty() {
        cfg.thresholds = o.thresholds;
    }
    if let Some(a) = o.averages {
        cfg.averages = Some((a[0], a[1]));
    }
    if let Some(p) = &o.calibration {
        cfg.calibration = Some(CalibrationFile::load(p)?.noise);
    }

    let mut late_failure = None;
    let (report, rows) = match kind {
        FitKind::WriteSpectrum => {
            let scan = load_scan(input, cfg.larmor_mhz)?;
            let fit = fit_write_spectrum(&scan)?;
            let p = WriteSpectrumParams {
                a_narr: fit.a_narr,
                a_broad: fit.a_broad,
                a_lkg: fit.a_lkg,
                a_bg: fit.a_bg,
                width_1: fit.width_1,
                width_2: fit.width_2,
                width_broad: fit.width_broad,
            };
            let err = spectrum_errors(&scan.err_with_write, &scan.counts_with_write);
            let rows = (0..scan.detunings.len())
                .map(|i| PlotRow {
                    series: "with_write",
                    x: scan.detunings[i],
                    y: scan.counts_with_write[i],
                    err: err[i],
                    model: write_spectrum_model(&p, cfg.larmor_mhz, scan.detunings[i]),
                })
                .collect();
            (fit.report(), rows)
        }
        FitKind::ReadSpectrum => {
            let scan = load_scan(input, cfg.larmor_mhz)?;
            let fit = fit_read_spectrum(&scan)?;
            let p = ReadSpectrumParams {
                b_narr_write: fit.a_narr,
                b_narr_no_write: fit.a_narr_no_write.unwrap_or(0.0),
                b_broad: fit.a_broad,
                b_lkg: fit.a_lkg,
                b_bg: fit.a_bg,
                width_1: fit.width_1,
                width_2: fit.width_2,
                width_broad: fit.width_broad,
            };
            let err_w = spectrum_errors(&scan.err_with_write, &scan.counts_with_write);
            let nw = scan.counts_no_write.clone().unwrap_or_default();
            let err_nw = spectrum_errors(&scan.err_no_write, &nw);
            let mut rows = Vec::new();
            for i in 0..scan.detunings.len() {
                let x = scan.detunings[i];
                rows.push(PlotRow {
                    series: "with_write",
                    x,
                    y: scan.counts_with_write[i],
                    err: err_w[i],
                    model: read_spectrum_model(&p, cfg.larmor_mhz, x, true),
                });
            }
            for i in 0..nw.len() {
                let x = scan.detunings[i];
                rows.push(PlotRow {
                    series: "no_write",
                    x,
                    y: nw[i],
                    err: err_nw[i],
                    model: read_spectrum_model(&p, cfg.larmor_mhz, x, false),
                });
            }
            let mut report = fit.report();
            insert(&mut report, "narrow_difference", p.b_narr_write - p.b_narr_no_write);
            (report, rows)
        }
        FitKind::NoiseLine => {
            let pts = read_curves(input)?;
            let fit = fit_noise_line(&pts)?;
            let rows = pts
                .iter()
                .map(|q| PlotRow {
                    series: "noise",
                    x: q.x,
                    y: q.y,
                    err: q.err,
                    model: fit.offset.value + fit.slope.value * q.x,
                })
                .collect();
            (fit.report(), rows)
        }
        FitKind::Decay => {
            let pts = read_curves(input)?;
            let fit = fit_memory_decay(&pts, cfg.decay_model)?;
            let rows = pts
                .iter()
                .map(|q| PlotRow {
                    series: "decay",
                    x: q.x,
                    y: q.y,
                    err: q.err,
                    model: fit.eval(q.x),
                })
                .collect();
            let mut report = fit.report();
            let (crossings, failure) = decay_crossings(&fit, &cfg);
            if !crossings.is_empty() {
                insert(&mut report, "crossings", crossings);
            }
            late_failure = failure;
            (report, rows)
        }
        FitKind::Efficiencies => {
            let cal = cfg.calibration.ok_or_else(|| {
                CliError::Usage("the efficiency fit needs --calibration <file> or [calibration] in --config".into())
            })?;
            let pts: Vec<EfficiencyPoint> = if is_json(input) {
                read_json(input)?
            } else {
                read_efficiency_csv(open(input)?)?
            };
            let fit = fit_detection_efficiencies(&pts, &cal)?;
            let n_w: Vec<f64> = pts.iter().map(|p| p.n_w).collect();
            let curves = predict_curves(fit.eta_x.value, fit.eta_y.value, &cal, &n_w)?;
            let mut rows = Vec::new();
            for (i, p) in pts.iter().enumerate() {
                let series = [
                    ("g2_wr", p.g2_wr, curves.g2_wr[i]),
                    ("eta_r", p.eta_r, curves.eta_r[i]),
                    ("n_r", p.n_r, curves.n_r[i]),
                ];
                for (name, data, model) in series {
                    if let Some((y, err)) = data {
                        rows.push(PlotRow {
                            series: name,
                            x: p.n_w,
                            y,
                            err,
                            model,
                        });
                    }
                }
            }
            rows.sort_by_key(|r| match r.series {
                "g2_wr" => 0,
                "eta_r" => 1,
                _ => 2,
            });
            let mut report = fit.report();
            if let Some(inputs) = cfg.intrinsic {
                let star = intrinsic_retrieval(fit.eta_y, inputs.eta_d, inputs.eta_esc)?;
                insert(&mut report, "intrinsic_retrieval", star);
            }
            (report, rows)
        }
    };
    let stem = kind.stem();
    write_json(&common.out_dir.join(format!("{stem}_report.json")), &report)?;
    write_file(&common.out_dir.join(format!("{stem}_plot.csv")), &plot_csv(&rows)?)?;
    if common.format == Format::Csv {
        write_file(
            &common.out_dir.join(format!("{stem}_parameters.csv")),
            &parameters_csv(&report)?,
        )?;
    }
    match late_failure {
        Some(msg) => Err(CliError::Numerical(msg)),
        None => Ok(()),
    }
}
