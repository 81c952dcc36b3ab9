//! Filter-cavity scans of write and read photons.
//!
//! The narrow contribution passes both filter cavities, `L₁·L₂`, where `Lᵢ`
//! is a Lorentzian of unit peak height and FWHM `wᵢ`. The broad contribution
//! from asymmetric excitations is a single wider Lorentzian at the same
//! frequency, the leakage of excitation light sits one Larmor frequency away
//! (at `−ν_L` for write, `+ν_L` for read), and a flat background completes
//! the model. All frequencies are in MHz.

use std::io::Read;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::curves::csv_error;
use super::lm::{levenberg_marquardt, LmOptions, Problem};
use super::{FitError, FitReport};
use crate::measured::Measured;

pub const DEFAULT_LARMOR_MHZ: f64 = 2.4;

/// Unit-peak Lorentzian with full width at half maximum `fwhm`.
pub fn lorentzian(x: f64, center: f64, fwhm: f64) -> f64 {
    let u = 2.0 * (x - center) / fwhm;
    1.0 / (1.0 + u * u)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WriteSpectrumParams {
    pub a_narr: f64,
    pub a_broad: f64,
    pub a_lkg: f64,
    pub a_bg: f64,
    pub width_1: f64,
    pub width_2: f64,
    pub width_broad: f64,
}

impl WriteSpectrumParams {
    fn to_vec(self) -> Vec<f64> {
        vec![
            self.a_narr,
            self.a_broad,
            self.a_lkg,
            self.a_bg,
            self.width_1,
            self.width_2,
            self.width_broad,
        ]
    }

    fn from_slice(p: &[f64]) -> Self {
        Self {
            a_narr: p[0],
            a_broad: p[1],
            a_lkg: p[2],
            a_bg: p[3],
            width_1: p[4],
            width_2: p[5],
            width_broad: p[6],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadSpectrumParams {
    pub b_narr_write: f64,
    pub b_narr_no_write: f64,
    pub b_broad: f64,
    pub b_lkg: f64,
    pub b_bg: f64,
    pub width_1: f64,
    pub width_2: f64,
    pub width_broad: f64,
}

impl ReadSpectrumParams {
    fn to_vec(self) -> Vec<f64> {
        vec![
            self.b_narr_write,
            self.b_narr_no_write,
            self.b_broad,
            self.b_lkg,
            self.b_bg,
            self.width_1,
            self.width_2,
            self.width_broad,
        ]
    }

    fn from_slice(p: &[f64]) -> Self {
        Self {
            b_narr_write: p[0],
            b_narr_no_write: p[1],
            b_broad: p[2],
            b_lkg: p[3],
            b_bg: p[4],
            width_1: p[5],
            width_2: p[6],
            width_broad: p[7],
        }
    }
}

fn shape(x: f64, narr: f64, broad: f64, lkg: f64, bg: f64, w1: f64, w2: f64, wb: f64, lkg_at: f64) -> f64 {
    narr * lorentzian(x, 0.0, w1) * lorentzian(x, 0.0, w2)
        + broad * lorentzian(x, 0.0, wb)
        + lkg * lorentzian(x, lkg_at, w1) * lorentzian(x, lkg_at, w2)
        + bg
}

pub fn write_spectrum_model(p: &WriteSpectrumParams, larmor_mhz: f64, detuning: f64) -> f64 {
    shape(
        detuning,
        p.a_narr,
        p.a_broad,
        p.a_lkg,
        p.a_bg,
        p.width_1,
        p.width_2,
        p.width_broad,
        -larmor_mhz,
    )
}

/// Read spectrum with (`with_write = true`) or without preceding write.
pub fn read_spectrum_model(p: &ReadSpectrumParams, larmor_mhz: f64, detuning: f64, with_write: bool) -> f64 {
    let narr = if with_write { p.b_narr_write } else { p.b_narr_no_write };
    shape(
        detuning,
        narr,
        p.b_broad,
        p.b_lkg,
        p.b_bg,
        p.width_1,
        p.width_2,
        p.width_broad,
        larmor_mhz,
    )
}

/// Detected counts per pulse against filter-cavity detuning.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumScan {
    pub detunings: Vec<f64>,
    pub counts_with_write: Vec<f64>,
    /// Standard errors; `√max(counts, 1)` when absent.
    #[serde(default)]
    pub err_with_write: Option<Vec<f64>>,
    #[serde(default)]
    pub counts_no_write: Option<Vec<f64>>,
    #[serde(default)]
    pub err_no_write: Option<Vec<f64>>,
    #[serde(default = "default_larmor")]
    pub larmor_mhz: f64,
}

fn default_larmor() -> f64 {
    DEFAULT_LARMOR_MHZ
}

fn poisson_errors(counts: &[f64]) -> Vec<f64> {
    counts.iter().map(|c| c.max(1.0).sqrt()).collect()
}

impl SpectrumScan {
    pub fn new(detunings: Vec<f64>, counts_with_write: Vec<f64>) -> Self {
        Self {
            detunings,
            counts_with_write,
            err_with_write: None,
            counts_no_write: None,
            err_no_write: None,
            larmor_mhz: DEFAULT_LARMOR_MHZ,
        }
    }

    pub fn validate(&self) -> Result<(), FitError> {
        let n = self.detunings.len();
        let same = |v: &Option<Vec<f64>>| v.as_ref().is_none_or(|v| v.len() == n);
        if self.counts_with_write.len() != n
            || !same(&self.err_with_write)
            || !same(&self.counts_no_write)
            || !same(&self.err_no_write)
        {
            return Err(FitError::InvalidInput("scan columns differ in length".into()));
        }
        let increasing = self.detunings.windows(2).all(|w| w[1] > w[0]);
        let decreasing = self.detunings.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(FitError::InvalidInput("detunings must be strictly monotonic".into()));
        }
        let all = self
            .detunings
            .iter()
            .chain(&self.counts_with_write)
            .chain(self.counts_no_write.iter().flatten());
        if all.clone().any(|v| !v.is_finite()) {
            return Err(FitError::InvalidInput("non-finite scan entry".into()));
        }
        for e in [&self.err_with_write, &self.err_no_write].into_iter().flatten() {
            if e.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(FitError::InvalidInput("errors must be positive".into()));
            }
        }
        if !(self.larmor_mhz > 0.0) {
            return Err(FitError::InvalidInput(format!("larmor_mhz = {}", self.larmor_mhz)));
        }
        Ok(())
    }

    fn errors_with_write(&self) -> Vec<f64> {
        self.err_with_write
            .clone()
            .unwrap_or_else(|| poisson_errors(&self.counts_with_write))
    }

    fn errors_no_write(&self) -> Option<Vec<f64>> {
        let counts = self.counts_no_write.as_ref()?;
        Some(self.err_no_write.clone().unwrap_or_else(|| poisson_errors(counts)))
    }
}

/// Reads a scan from CSV with columns `detuning_mhz,counts_with_write` and
/// optionally `err_with_write,counts_no_write,err_no_write`.
pub fn read_spectrum_csv<R: Read>(input: R, larmor_mhz: f64) -> Result<SpectrumScan, FitError> {
    #[derive(Deserialize)]
    struct Row {
        detuning_mhz: f64,
        counts_with_write: f64,
        #[serde(default)]
        err_with_write: Option<f64>,
        #[serde(default)]
        counts_no_write: Option<f64>,
        #[serde(default)]
        err_no_write: Option<f64>,
    }
    let mut reader = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for row in reader.deserialize::<Row>() {
        rows.push(row.map_err(csv_error)?);
    }
    let column = |f: &dyn Fn(&Row) -> Option<f64>, name: &str| -> Result<Option<Vec<f64>>, FitError> {
        let vals: Vec<Option<f64>> = rows.iter().map(f).collect();
        if vals.iter().all(Option::is_none) {
            return Ok(None);
        }
        match vals.iter().position(Option::is_none) {
            Some(i) => Err(FitError::Parse {
                line: i + 2,
                message: format!("missing {name}"),
            }),
            None => Ok(Some(vals.into_iter().flatten().collect())),
        }
    };
    let scan = SpectrumScan {
        detunings: rows.iter().map(|r| r.detuning_mhz).collect(),
        counts_with_write: rows.iter().map(|r| r.counts_with_write).collect(),
        err_with_write: column(&|r| r.err_with_write, "err_with_write")?,
        counts_no_write: column(&|r| r.counts_no_write, "counts_no_write")?,
        err_no_write: column(&|r| r.err_no_write, "err_no_write")?,
        larmor_mhz,
    };
    scan.validate()?;
    Ok(scan)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    Write,
    Read,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralFitResult {
    pub kind: SpectrumKind,
    /// Narrow amplitude; for read scans the one with write pulse.
    pub a_narr: f64,
    /// Narrow amplitude of the read scan without write pulse.
    pub a_narr_no_write: Option<f64>,
    pub a_broad: f64,
    pub a_lkg: f64,
    pub a_bg: f64,
    /// Filter-cavity linewidths (FWHM), `width_1 ≤ width_2`.
    pub width_1: f64,
    pub width_2: f64,
    pub width_broad: f64,
    pub larmor_mhz: f64,
    pub names: Vec<String>,
    pub params: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub chi2: f64,
    pub residuals: Vec<f64>,
}

impl SpectralFitResult {
    pub fn std_err(&self, name: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == name)?;
        Some(self.covariance[i][i].max(0.0).sqrt())
    }

    pub fn report(&self) -> FitReport {
        let names: Vec<&str> = self.names.iter().map(String::as_str).collect();
        let n = self.params.len();
        let cov = DMatrix::from_fn(n, n, |i, j| self.covariance[i][j]);
        let kind = match self.kind {
            SpectrumKind::Write => "write_spectrum",
            SpectrumKind::Read => "read_spectrum",
        };
        let mut report = FitReport::new(kind, &names, &self.params, &cov, self.chi2, self.residuals.clone());
        report
            .derived
            .insert("larmor_mhz".into(), serde_json::json!(self.larmor_mhz));
        if self.kind == SpectrumKind::Write {
            if let Ok(eta) = write_efficiency(self) {
                report
                    .derived
                    .insert("write_efficiency".into(), serde_json::to_value(eta).unwrap_or_default());
            }
        }
        report
    }
}

/// `η_W = a_narr / (a_narr + a_broad)` with the uncertainty propagated from
/// the fit covariance.
pub fn write_efficiency(fit: &SpectralFitResult) -> Result<Measured, FitError> {
    let (a, b) = (fit.a_narr, fit.a_broad);
    let total = a + b;
    if !(total > 0.0) {
        return Err(FitError::ZeroDivisor("write_efficiency"));
    }
    let idx = |name: &str| fit.names.iter().position(|n| n == name);
    let value = a / total;
    let (Some(ia), Some(ib)) = (idx("a_narr").or(idx("b_narr_write")), idx("a_broad").or(idx("b_broad"))) else {
        return Ok(Measured::exact(value));
    };
    let c = &fit.covariance;
    let (ga, gb) = (b / (total * total), -a / (total * total));
    let var = ga * ga * c[ia][ia] + 2.0 * ga * gb * c[ia][ib] + gb * gb * c[ib][ib];
    Ok(Measured::new(value, var.max(0.0).sqrt()))
}

/// Estimated half-max width of the peak around the centre bin.
fn peak_width(x: &[f64], y: &[f64], center: usize, bg: f64) -> f64 {
    let half = bg + 0.5 * (y[center] - bg);
    let mut lo = center;
    while lo > 0 && y[lo] > half {
        lo -= 1;
    }
    let mut hi = center;
    while hi + 1 < y.len() && y[hi] > half {
        hi += 1;
    }
    let span = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (x[hi] - x[lo]).abs().max(1e-3 * span.max(1e-3))
}

fn nearest(x: &[f64], target: f64) -> usize {
    (0..x.len())
        .min_by(|&a, &b| (x[a] - target).abs().total_cmp(&(x[b] - target).abs()))
        .unwrap_or(0)
}

/// Seeds `(narrow, broad, leakage, background, w1, w2, wb)` by peak picking;
/// several width ratios are returned to be tried in turn.
fn seeds(x: &[f64], y: &[f64], lkg_at: f64) -> Vec<[f64; 7]> {
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let bg = sorted[sorted.len() / 10].max(0.0);
    let c = nearest(x, 0.0);
    let l = nearest(x, lkg_at);
    let peak = (y[c] - bg).max(f64::MIN_POSITIVE);
    let fwhm = peak_width(x, y, c, bg);
    let lkg = (y[l] - bg).max(0.0);
    let mut out = Vec::new();
    for &(r1, r2, rb, fb) in &[
        (1.0, 1.6, 5.0, 0.2),
        (0.8, 2.5, 4.0, 0.3),
        (1.2, 1.3, 8.0, 0.1),
        (1.0, 1.6, 2.5, 0.4),
    ] {
        out.push([
            peak * (1.0 - fb),
            peak * fb,
            lkg,
            bg,
            fwhm * r1,
            fwhm * r2,
            fwhm * rb,
        ]);
    }
    out
}

fn best_fit<F>(
    residual: F,
    names: &[&str],
    starts: Vec<Vec<f64>>,
    widths_from: usize,
) -> Result<super::lm::LmResult, FitError>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = names.len();
    let mut lower = vec![0.0; n];
    for v in lower.iter_mut().skip(widths_from) {
        *v = 1e-9;
    }
    let upper = vec![f64::INFINITY; n];
    let mut best: Option<super::lm::LmResult> = None;
    let mut last_err = None;
    for start in starts {
        let mut problem = Problem::bounded(names, start.clone(), lower.clone(), upper.clone());
        // Amplitudes may start at zero; step them on the scale of the data.
        let amp_scale = start[..widths_from].iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        problem.scale = Some(
            start
                .iter()
                .enumerate()
                .map(|(i, v)| if i < widths_from { v.abs().max(1e-3 * amp_scale) } else { v.abs() })
                .collect(),
        );
        match levenberg_marquardt(&residual, &problem, &LmOptions::default()) {
            Ok(res) => {
                if best.as_ref().is_none_or(|b| res.chi2 < b.chi2) {
                    best = Some(res);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(FitError::NonConvergence { iterations: 0 }))
}

/// Reorders the two filter widths so that `w1 ≤ w2`, permuting the
/// covariance to match.
fn sort_widths(params: &mut [f64], cov: &mut DMatrix<f64>, i1: usize, i2: usize) {
    if params[i1] > params[i2] {
        params.swap(i1, i2);
        cov.swap_rows(i1, i2);
        cov.swap_columns(i1, i2);
    }
}

fn cov_rows(cov: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..cov.nrows())
        .map(|i| (0..cov.ncols()).map(|j| cov[(i, j)]).collect())
        .collect()
}

const WRITE_NAMES: [&str; 7] = ["a_narr", "a_broad", "a_lkg", "a_bg", "width_1", "width_2", "width_broad"];
const READ_NAMES: [&str; 8] = [
    "b_narr_write",
    "b_narr_no_write",
    "b_broad",
    "b_lkg",
    "b_bg",
    "width_1",
    "width_2",
    "width_broad",
];

pub fn fit_write_spectrum(scan: &SpectrumScan) -> Result<SpectralFitResult, FitError> {
    scan.validate()?;
    let n_par = WRITE_NAMES.len();
    if scan.detunings.len() < n_par {
        return Err(FitError::InvalidInput(format!(
            "{} scan points for {n_par} parameters",
            scan.detunings.len()
        )));
    }
    let x = &scan.detunings;
    let y = &scan.counts_with_write;
    let err = scan.errors_with_write();
    let nu = scan.larmor_mhz;
    let residual = |p: &[f64]| -> Vec<f64> {
        let params = WriteSpectrumParams::from_slice(p);
        (0..x.len())
            .map(|i| (y[i] - write_spectrum_model(&params, nu, x[i])) / err[i])
            .collect()
    };
    let starts = seeds(x, y, -nu).into_iter().map(|s| s.to_vec()).collect();
    let res = best_fit(residual, &WRITE_NAMES, starts, 4)?;
    let mut params = res.params.clone();
    let mut cov = res.covariance.clone();
    sort_widths(&mut params, &mut cov, 4, 5);
    let p = WriteSpectrumParams::from_slice(&params);
    Ok(SpectralFitResult {
        kind: SpectrumKind::Write,
        a_narr: p.a_narr,
        a_narr_no_write: None,
        a_broad: p.a_broad,
        a_lkg: p.a_lkg,
        a_bg: p.a_bg,
        width_1: p.width_1,
        width_2: p.width_2,
        width_broad: p.width_broad,
        larmor_mhz: nu,
        names: WRITE_NAMES.iter().map(|s| s.to_string()).collect(),
        params: p.to_vec(),
        covariance: cov_rows(&cov),
        chi2: res.chi2,
        residuals: res.residuals,
    })
}

/// Joint fit of the read scans with and without write pulse; only the
/// narrow amplitudes differ between the two.
pub fn fit_read_spectrum(scan: &SpectrumScan) -> Result<SpectralFitResult, FitError> {
    scan.validate()?;
    let (Some(y_nw), Some(err_nw)) = (scan.counts_no_write.as_ref(), scan.errors_no_write()) else {
        return Err(FitError::InvalidInput("read spectrum fit needs the no-write scan".into()));
    };
    let x = &scan.detunings;
    let y_w = &scan.counts_with_write;
    let err_w = scan.errors_with_write();
    let nu = scan.larmor_mhz;
    if 2 * x.len() < READ_NAMES.len() {
        return Err(FitError::InvalidInput("too few scan points".into()));
    }
    let residual = |p: &[f64]| -> Vec<f64> {
        let params = ReadSpectrumParams::from_slice(p);
        let with = (0..x.len()).map(|i| (y_w[i] - read_spectrum_model(&params, nu, x[i], true)) / err_w[i]);
        let without = (0..x.len()).map(|i| (y_nw[i] - read_spectrum_model(&params, nu, x[i], false)) / err_nw[i]);
        with.chain(without).collect()
    };
    let nw_seeds = seeds(x, y_nw, nu);
    let starts = seeds(x, y_w, nu)
        .into_iter()
        .zip(nw_seeds)
        .map(|(w, nw)| {
            let broad = 0.5 * (w[1] + nw[1]);
            vec![w[0], nw[0], broad, 0.5 * (w[2] + nw[2]), 0.5 * (w[3] + nw[3]), w[4], w[5], w[6]]
        })
        .collect();
    let res = best_fit(residual, &READ_NAMES, starts, 5)?;
    let mut params = res.params.clone();
    let mut cov = res.covariance.clone();
    sort_widths(&mut params, &mut cov, 5, 6);
    let p = ReadSpectrumParams::from_slice(&params);
    Ok(SpectralFitResult {
        kind: SpectrumKind::Read,
        a_narr: p.b_narr_write,
        a_narr_no_write: Some(p.b_narr_no_write),
        a_broad: p.b_broad,
        a_lkg: p.b_lkg,
        a_bg: p.b_bg,
        width_1: p.width_1,
        width_2: p.width_2,
        width_broad: p.width_broad,
        larmor_mhz: nu,
        names: READ_NAMES.iter().map(|s| s.to_string()).collect(),
        params: p.to_vec(),
        covariance: cov_rows(&cov),
        chi2: res.chi2,
        residuals: res.residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn truth() -> WriteSpectrumParams {
        WriteSpectrumParams {
            a_narr: 0.82,
            a_broad: 0.18,
            a_lkg: 0.3,
            a_bg: 0.01,
            width_1: 0.5,
            width_2: 1.1,
            width_broad: 5.0,
        }
    }

    fn grid() -> Vec<f64> {
        (0..121).map(|i| -6.0 + 0.1 * i as f64).collect()
    }

    #[test]
    fn lorentzian_has_unit_peak() {
        assert_eq!(lorentzian(1.0, 1.0, 0.3), 1.0);
        assert!((lorentzian(1.15, 1.0, 0.3) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn noiseless_write_scan_is_recovered() {
        let x = grid();
        let y: Vec<f64> = x.iter().map(|&d| write_spectrum_model(&truth(), 2.4, d)).collect();
        let mut scan = SpectrumScan::new(x, y.clone());
        scan.err_with_write = Some(y.iter().map(|v| 1e-3 * v.max(0.01)).collect());
        let fit = fit_write_spectrum(&scan).unwrap();
        let eta = write_efficiency(&fit).unwrap();
        assert!((eta.value - 0.82).abs() < 1e-8, "{eta:?}");
        assert!((fit.width_1 - 0.5).abs() < 1e-6 && (fit.width_2 - 1.1).abs() < 1e-6);
    }

    #[test]
    fn write_efficiency_limits() {
        let mut fit = SpectralFitResult {
            kind: SpectrumKind::Write,
            a_narr: 1.0,
            a_narr_no_write: None,
            a_broad: 0.0,
            a_lkg: 0.0,
            a_bg: 0.0,
            width_1: 1.0,
            width_2: 1.0,
            width_broad: 1.0,
            larmor_mhz: 2.4,
            names: vec![],
            params: vec![],
            covariance: vec![],
            chi2: 0.0,
            residuals: vec![],
        };
        assert_eq!(write_efficiency(&fit).unwrap().value, 1.0);
        fit.a_narr = 0.0;
        fit.a_broad = 1.0;
        assert_eq!(write_efficiency(&fit).unwrap().value, 0.0);
        fit.a_broad = 0.0;
        assert!(write_efficiency(&fit).is_err());
    }

    #[test]
    fn scan_validation() {
        let scan = SpectrumScan::new(vec![0.0, 0.0, 1.0], vec![1.0; 3]);
        assert!(scan.validate().is_err());
        let scan = SpectrumScan::new(vec![0.0, 1.0], vec![1.0; 3]);
        assert!(scan.validate().is_err());
        let csv = "detuning_mhz,counts_with_write\n0,1\n1,2\n";
        assert_eq!(read_spectrum_csv(csv.as_bytes(), 2.4).unwrap().detunings, vec![0.0, 1.0]);
        let csv = "detuning_mhz,counts_with_write,counts_no_write\n0,1,1\n1,2,\n";
        assert!(matches!(
            read_spectrum_csv(csv.as_bytes(), 2.4),
            Err(FitError::Parse { line: 3, .. })
        ));
    }
}
