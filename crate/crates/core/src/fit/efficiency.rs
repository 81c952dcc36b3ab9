use std::io::Read;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::curves::csv_error;
use super::lm::{levenberg_marquardt, LmOptions, LmResult, Problem};
use super::{FitError, FitReport};
use crate::measured::Measured;
use crate::pgf::{self, EfficiencyChain, ModelParams, WriteNoiseLine};

/// Noise calibration held fixed in the efficiency fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseCalibration {
    pub line: WriteNoiseLine,
    pub lambda_b: f64,
    pub g2_bb: f64,
}

impl NoiseCalibration {
    /// Model parameters at mean write counts `n_w`; `μ` follows from
    /// `⟨n_W⟩ = η_X μ + λ_A(⟨n_W⟩)`.
    pub fn model_at(&self, n_w: f64, eta_x: f64, eta_y: f64) -> Result<ModelParams, FitError> {
        if !(eta_x > 0.0) {
            return Err(FitError::ZeroDivisor("eta_x"));
        }
        let lambda_a = self.line.noise_at(n_w);
        let params = ModelParams {
            mu: ((n_w - lambda_a) / eta_x).max(0.0),
            lambda_a,
            lambda_b: self.lambda_b,
            eta_x,
            eta_y,
            g2_aa: 1.0,
            g2_bb: self.g2_bb,
        };
        params.validate()?;
        Ok(params)
    }
}

/// One write power: the mean write counts and any of the three measured
/// curves as `(value, std_err)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyPoint {
    pub n_w: f64,
    #[serde(default)]
    pub g2_wr: Option<(f64, f64)>,
    #[serde(default)]
    pub eta_r: Option<(f64, f64)>,
    #[serde(default)]
    pub n_r: Option<(f64, f64)>,
}

/// Model curves on a grid of mean write counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyCurves {
    pub n_w: Vec<f64>,
    pub g2_wr: Vec<f64>,
    pub eta_r: Vec<f64>,
    pub n_r: Vec<f64>,
}

pub fn predict_curves(
    eta_x: f64,
    eta_y: f64,
    cal: &NoiseCalibration,
    n_w: &[f64],
) -> Result<EfficiencyCurves, FitError> {
    let mut out = EfficiencyCurves {
        n_w: n_w.to_vec(),
        g2_wr: Vec::with_capacity(n_w.len()),
        eta_r: Vec::with_capacity(n_w.len()),
        n_r: Vec::with_capacity(n_w.len()),
    };
    for &x in n_w {
        let p = cal.model_at(x, eta_x, eta_y)?;
        out.g2_wr.push(pgf::g2_cross(&p)?);
        out.eta_r.push(pgf::retrieval_efficiency_model(&p)?);
        out.n_r.push(pgf::mean_counts(&p).1);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyFit {
    pub eta_x: Measured,
    pub eta_y: Measured,
    pub covariance: [[f64; 2]; 2],
    pub chi2: f64,
    /// Residuals in the order g²_WR, η_R, ⟨n_R⟩ per point.
    pub residuals: Vec<f64>,
}

impl EfficiencyFit {
    pub fn report(&self) -> FitReport {
        let c = &self.covariance;
        FitReport::new(
            "efficiencies",
            &["eta_x", "eta_y"],
            &[self.eta_x.value, self.eta_y.value],
            &DMatrix::from_row_slice(2, 2, &[c[0][0], c[0][1], c[1][0], c[1][1]]),
            self.chi2,
            self.residuals.clone(),
        )
    }
}

fn check_efficiency_points(points: &[EfficiencyPoint], cal: &NoiseCalibration) -> Result<usize, FitError> {
    cal.line.validate()?;
    if !(cal.lambda_b >= 0.0 && cal.g2_bb >= 0.0) {
        return Err(FitError::InvalidInput("read noise calibration must be non-negative".into()));
    }
    let mut n = 0;
    for (i, p) in points.iter().enumerate() {
        if !(p.n_w.is_finite() && p.n_w > cal.line.noise_at(p.n_w)) {
            return Err(FitError::InvalidInput(format!(
                "point {i}: mean write counts {} do not exceed the write noise",
                p.n_w
            )));
        }
        for (v, e) in [p.g2_wr, p.eta_r, p.n_r].into_iter().flatten() {
            if !(v.is_finite() && e.is_finite() && e > 0.0) {
                return Err(FitError::InvalidInput(format!("point {i}: ({v} ± {e})")));
            }
            n += 1;
        }
    }
    Ok(n)
}

fn residuals(points: &[EfficiencyPoint], cal: &NoiseCalibration, eta_x: f64, eta_y: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for p in points {
        let Ok(m) = cal.model_at(p.n_w, eta_x, eta_y) else {
            out.extend(std::iter::repeat_n(f64::NAN, 3));
            continue;
        };
        if let Some((v, e)) = p.g2_wr {
            out.push((v - pgf::g2_cross(&m).unwrap_or(f64::NAN)) / e);
        }
        if let Some((v, e)) = p.eta_r {
            out.push((v - pgf::retrieval_efficiency_model(&m).unwrap_or(f64::NAN)) / e);
        }
        if let Some((v, e)) = p.n_r {
            out.push((v - pgf::mean_counts(&m).1) / e);
        }
    }
    out
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    v.retain(|x| x.is_finite());
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(v[v.len() / 2])
}

/// Low-noise approximations: `g²_WR − 1 ≈ 1/μ` gives `η_X`, and
/// `η_R ≈ η_Y` or `⟨n_R⟩ − λ_B ≈ η_Y μ` gives `η_Y`.
fn analytic_seed(points: &[EfficiencyPoint], cal: &NoiseCalibration) -> Option<(f64, f64)> {
    let eta_x = median(
        points
            .iter()
            .filter_map(|p| {
                let (g, _) = p.g2_wr?;
                (g > 1.0).then(|| (p.n_w - cal.line.noise_at(p.n_w)) * (g - 1.0))
            })
            .collect(),
    )?;
    let eta_y = median(points.iter().filter_map(|p| p.eta_r.map(|e| e.0)).collect()).or_else(|| {
        median(
            points
                .iter()
                .filter_map(|p| {
                    let (n_r, _) = p.n_r?;
                    let mu = (p.n_w - cal.line.noise_at(p.n_w)) / eta_x;
                    Some((n_r - cal.lambda_b) / mu)
                })
                .collect(),
        )
    })?;
    let clamp = |x: f64| x.clamp(1e-4, 1.0);
    Some((clamp(eta_x), clamp(eta_y)))
}

/// Best point of a coarse logarithmic grid over `(0, 1]²`.
fn grid_seed(points: &[EfficiencyPoint], cal: &NoiseCalibration) -> (f64, f64) {
    let axis: Vec<f64> = (0..=24).map(|i| 10f64.powf(-4.0 + i as f64 / 6.0)).collect();
    let mut best = (f64::INFINITY, (0.1, 0.1));
    for &ex in &axis {
        for &ey in &axis {
            let cost: f64 = residuals(points, cal, ex, ey).iter().map(|r| r * r).sum();
            if cost < best.0 {
                best = (cost, (ex, ey));
            }
        }
    }
    best.1
}

/// Joint weighted fit of `g²_WR`, `η_R` and `⟨n_R⟩` against `⟨n_W⟩` with
/// the noise calibration held fixed; `η_X` and `η_Y` are free.
pub fn fit_detection_efficiencies(
    points: &[EfficiencyPoint],
    cal: &NoiseCalibration,
) -> Result<EfficiencyFit, FitError> {
    let n_data = check_efficiency_points(points, cal)?;
    if n_data < 2 {
        return Err(FitError::InvalidInput("need at least two measured values".into()));
    }
    let names = ["eta_x", "eta_y"];
    let f = |p: &[f64]| residuals(points, cal, p[0], p[1]);
    let mut starts = vec![grid_seed(points, cal)];
    if let Some(seed) = analytic_seed(points, cal) {
        starts.insert(0, seed);
    }
    let mut best: Option<LmResult> = None;
    let mut last_err = None;
    for (ex, ey) in starts {
        let problem = Problem::bounded(&names, vec![ex, ey], vec![1e-6, 1e-6], vec![1.0, 1.0]);
        match levenberg_marquardt(f, &problem, &LmOptions::default()) {
            Ok(res) if best.as_ref().is_none_or(|b| res.chi2 < b.chi2) => best = Some(res),
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    // Unidentifiability is a property of the data, not of the seed.
    if let Some(e @ FitError::Unidentifiable { .. }) = last_err {
        return Err(e);
    }
    let res = best.ok_or_else(|| last_err.unwrap_or(FitError::NonConvergence { iterations: 0 }))?;
    let errs = res.std_errs();
    let c = &res.covariance;
    Ok(EfficiencyFit {
        eta_x: Measured::new(res.params[0], errs[0]),
        eta_y: Measured::new(res.params[1], errs[1]),
        covariance: [[c[(0, 0)], c[(0, 1)]], [c[(1, 0)], c[(1, 1)]]],
        chi2: res.chi2,
        residuals: res.residuals,
    })
}

/// Reads `n_w,g2_wr,g2_wr_err,eta_r,eta_r_err,n_r,n_r_err` CSV; curve
/// columns may be left empty or omitted.
pub fn read_efficiency_csv<R: Read>(input: R) -> Result<Vec<EfficiencyPoint>, FitError> {
    #[derive(Deserialize)]
    struct Row {
        n_w: f64,
        #[serde(default)]
        g2_wr: Option<f64>,
        #[serde(default)]
        g2_wr_err: Option<f64>,
        #[serde(default)]
        eta_r: Option<f64>,
        #[serde(default)]
        eta_r_err: Option<f64>,
        #[serde(default)]
        n_r: Option<f64>,
        #[serde(default)]
        n_r_err: Option<f64>,
    }
    let mut reader = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(csv_error)?;
        let pair = |v: Option<f64>, e: Option<f64>, name: &str| match (v, e) {
            (Some(v), Some(e)) => Ok(Some((v, e))),
            (None, None) => Ok(None),
            _ => Err(FitError::Parse {
                line: i + 2,
                message: format!("{name} needs both a value and an error"),
            }),
        };
        out.push(EfficiencyPoint {
            n_w: row.n_w,
            g2_wr: pair(row.g2_wr, row.g2_wr_err, "g2_wr")?,
            eta_r: pair(row.eta_r, row.eta_r_err, "eta_r")?,
            n_r: pair(row.n_r, row.n_r_err, "n_r")?,
        });
    }
    Ok(out)
}

/// `η*_R = η_Y / (η_d η_esc)` with first-order error propagation.
pub fn intrinsic_retrieval(eta_y: Measured, eta_d: Measured, eta_esc: Measured) -> Result<Measured, FitError> {
    if !(eta_d.value > 0.0) {
        return Err(FitError::ZeroDivisor("eta_d"));
    }
    if !(eta_esc.value > 0.0) {
        return Err(FitError::ZeroDivisor("eta_esc"));
    }
    let value = eta_y.value / (eta_d.value * eta_esc.value);
    let rel = |m: Measured| m.std_err / m.value;
    let rel_y = if eta_y.value == 0.0 { 0.0 } else { rel(eta_y) };
    let var_rel = rel_y * rel_y + rel(eta_d).powi(2) + rel(eta_esc).powi(2);
    let std_err = if eta_y.value == 0.0 {
        eta_y.std_err / (eta_d.value * eta_esc.value)
    } else {
        value * var_rel.sqrt()
    };
    Ok(Measured::new(value, std_err))
}

/// As [`intrinsic_retrieval`], with `η_d` and `η_esc` taken as exact from
/// the chain.
pub fn intrinsic_retrieval_from_chain(eta_y: Measured, chain: &EfficiencyChain) -> Result<Measured, FitError> {
    chain.validate()?;
    intrinsic_retrieval(
        eta_y,
        Measured::exact(chain.eta_d),
        Measured::exact(chain.escape()?),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn calibration() -> NoiseCalibration {
        NoiseCalibration {
            line: WriteNoiseLine::new(6e-5, 0.08).unwrap(),
            lambda_b: 4e-3,
            g2_bb: 1.5,
        }
    }

    fn grid() -> Vec<f64> {
        (1..=8).map(|i| 2e-4 * i as f64).collect()
    }

    fn exact_points(eta_x: f64, eta_y: f64, cal: &NoiseCalibration) -> Vec<EfficiencyPoint> {
        let c = predict_curves(eta_x, eta_y, cal, &grid()).unwrap();
        (0..c.n_w.len())
            .map(|i| EfficiencyPoint {
                n_w: c.n_w[i],
                g2_wr: Some((c.g2_wr[i], 0.02 * c.g2_wr[i])),
                eta_r: Some((c.eta_r[i], 0.02 * c.eta_r[i])),
                n_r: Some((c.n_r[i], 0.01 * c.n_r[i])),
            })
            .collect()
    }

    #[test]
    fn noiseless_curves_are_recovered() {
        let cal = calibration();
        let fit = fit_detection_efficiencies(&exact_points(0.029, 0.06, &cal), &cal).unwrap();
        assert!((fit.eta_x.value - 0.029).abs() < 1e-7, "{fit:?}");
        assert!((fit.eta_y.value - 0.06).abs() < 1e-7, "{fit:?}");
        assert!(fit.eta_x.std_err > 0.0 && fit.eta_y.std_err > 0.0);
    }

    #[test]
    fn noise_free_read_counts_alone_fix_only_the_ratio() {
        let cal = NoiseCalibration {
            line: WriteNoiseLine::new(0.0, 0.0).unwrap(),
            lambda_b: 0.0,
            g2_bb: 1.0,
        };
        let points: Vec<_> = exact_points(0.029, 0.06, &cal)
            .into_iter()
            .map(|p| EfficiencyPoint {
                g2_wr: None,
                eta_r: None,
                ..p
            })
            .collect();
        assert!(matches!(
            fit_detection_efficiencies(&points, &cal),
            Err(FitError::Unidentifiable { .. })
        ));
    }

    #[test]
    fn intrinsic_retrieval_examples() {
        let r = intrinsic_retrieval(
            Measured::new(0.060, 0.002),
            Measured::new(0.19, 0.02),
            Measured::new(0.45, 0.02),
        )
        .unwrap();
        assert!((r.value - 0.7018).abs() < 1e-4);
        assert!((r.std_err - 0.0835).abs() < 1e-3, "{r:?}");
        let x = Measured::new(0.3, 0.01);
        assert_eq!(intrinsic_retrieval(x, Measured::exact(1.0), Measured::exact(1.0)).unwrap(), x);
        assert!(intrinsic_retrieval(x, Measured::exact(0.0), Measured::exact(1.0)).is_err());
    }

    #[test]
    fn csv_parsing() {
        let csv = "n_w,g2_wr,g2_wr_err,eta_r,eta_r_err,n_r,n_r_err\n0.001,5,0.1,,,0.01,0.001\n";
        let pts = read_efficiency_csv(csv.as_bytes()).unwrap();
        assert_eq!(pts[0].g2_wr, Some((5.0, 0.1)));
        assert_eq!(pts[0].eta_r, None);
        let bad = "n_w,g2_wr,g2_wr_err\n0.001,5,\n";
        assert!(matches!(read_efficiency_csv(bad.as_bytes()), Err(FitError::Parse { line: 2, .. })));
    }
}
