//! Correlation functions and retrieval efficiency from click records.
//!
//! All moments are accumulated as integer sums, so results are exact and
//! independent of the order (and parallelism) of the reduction. Uncertainties
//! are Poissonian: every sum of events is treated as a Poisson count and
//! relative errors are combined in quadrature.
//!
//! Heralded quantities condition on exactly one write click. Sequences with
//! two or more write clicks are excluded from them but still enter `⟨n_W⟩`.

mod histogram;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use histogram::{histogram_time_tags, Conditioning, TagHistogram};

use crate::dataset::{ClickDataset, SequenceRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("no sequences selected")]
    EmptySelection,
    #[error("no sequences with a write pulse")]
    NoWriteSequences,
    #[error("mean {0} counts vanish")]
    ZeroMean(&'static str),
    #[error("no sequence with exactly one write click")]
    NoHeralds,
    #[error("no sequences without write pulse to estimate the noise baseline")]
    MissingBaseline,
    #[error("dataset carries no read time tags; windowed statistics need them")]
    MissingTimeTags,
    #[error("invalid bin width {0} µs")]
    InvalidBinWidth(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Write,
    Read,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    G2Cross,
    G2Conditional,
    RetrievalEfficiency,
    G2Write,
    G2Read,
    G2ReadNoise,
    CauchySchwarz,
    MeanWrite,
    MeanRead,
    MeanReadNoise,
}

/// A statistic with its Poissonian standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub statistic: Statistic,
    pub value: f64,
    pub std_err: f64,
    pub n_sequences_used: u64,
    pub conditioning: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_us: Option<f64>,
}

impl CorrelationResult {
    pub fn measured(&self) -> crate::Measured {
        crate::Measured::new(self.value, self.std_err)
    }
}

/// Which sequences and which part of the read pulse enter the moments.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Restrict to sequences at this delay.
    pub delay_us: Option<f64>,
    /// Count read clicks in the first `window_us` of the pulse only.
    pub window_us: Option<f64>,
}

impl Selection {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn at_delay(delay_us: f64) -> Self {
        Self {
            delay_us: Some(delay_us),
            window_us: None,
        }
    }

    pub fn with_window(self, window_us: f64) -> Self {
        Self {
            window_us: Some(window_us),
            ..self
        }
    }
}

/// Sums over one kind of sequence.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountSums {
    pub n: u64,
    pub sum_w: u64,
    pub sum_r: u64,
    pub sum_wr: u64,
    /// `Σ w(w − 1)`.
    pub fact_w: u64,
    /// `Σ r(r − 1)`.
    pub fact_r: u64,
}

impl CountSums {
    fn add(&mut self, w: u64, r: u64) {
        self.n += 1;
        self.sum_w += w;
        self.sum_r += r;
        self.sum_wr += w * r;
        self.fact_w += w * w.saturating_sub(1);
        self.fact_r += r * r.saturating_sub(1);
    }

    fn merge(&mut self, o: &Self) {
        self.n += o.n;
        self.sum_w += o.sum_w;
        self.sum_r += o.sum_r;
        self.sum_wr += o.sum_wr;
        self.fact_w += o.fact_w;
        self.fact_r += o.fact_r;
    }
}

/// Integer moment sums of a selection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub with_write: CountSums,
    pub no_write: CountSums,
    /// Write-pulse sequences with exactly one write click.
    pub heralded: CountSums,
    /// Write-pulse sequences with two or more write clicks.
    pub multi_heralds: u64,
    pub selection: Selection,
}

impl Moments {
    pub fn from_dataset(data: &ClickDataset, selection: Selection) -> Result<Self, EstimateError> {
        if selection.window_us.is_some() && !data.has_time_tags() {
            return Err(EstimateError::MissingTimeTags);
        }
        let mut m = (0..data.len())
            .into_par_iter()
            .fold(Moments::default, |mut acc, i| {
                acc.add(&data.record(i), &selection);
                acc
            })
            .reduce(Moments::default, |mut a, b| {
                a.merge(&b);
                a
            });
        m.selection = selection;
        if m.with_write.n + m.no_write.n == 0 {
            return Err(EstimateError::EmptySelection);
        }
        Ok(m)
    }

    /// Serial accumulation over arbitrary records.
    pub fn from_records<'a, I>(records: I, selection: Selection) -> Result<Self, EstimateError>
    where
        I: IntoIterator<Item = SequenceRecord<'a>>,
    {
        let mut m = Moments {
            selection,
            ..Moments::default()
        };
        for rec in records {
            if selection.window_us.is_some() && rec.read_time_tags.is_none() {
                return Err(EstimateError::MissingTimeTags);
            }
            m.add(&rec, &selection);
        }
        if m.with_write.n + m.no_write.n == 0 {
            return Err(EstimateError::EmptySelection);
        }
        Ok(m)
    }

    fn add(&mut self, rec: &SequenceRecord<'_>, sel: &Selection) {
        if sel.delay_us.is_some_and(|d| d != rec.delay_us) {
            return;
        }
        let w = u64::from(rec.write_clicks);
        // Presence of tags is checked up front.
        let r = u64::from(rec.read_clicks_within(sel.window_us).unwrap_or(0));
        if rec.write_pulse_present {
            self.with_write.add(w, r);
            match w {
                1 => self.heralded.add(w, r),
                0 => {}
                _ => self.multi_heralds += 1,
            }
        } else {
            self.no_write.add(w, r);
        }
    }

    fn merge(&mut self, o: &Self) {
        self.with_write.merge(&o.with_write);
        self.no_write.merge(&o.no_write);
        self.heralded.merge(&o.heralded);
        self.multi_heralds += o.multi_heralds;
    }

    fn result(&self, statistic: Statistic, value: f64, std_err: f64, n: u64, cond: &str) -> CorrelationResult {
        CorrelationResult {
            statistic,
            value,
            std_err,
            n_sequences_used: n,
            conditioning: cond.to_string(),
            window_us: self.selection.window_us,
            delay_us: self.selection.delay_us,
        }
    }

    fn write_sums(&self) -> Result<&CountSums, EstimateError> {
        if self.with_write.n == 0 {
            return Err(EstimateError::NoWriteSequences);
        }
        Ok(&self.with_write)
    }

    /// `⟨n_W n_R⟩ / (⟨n_W⟩⟨n_R⟩)` over write-pulse sequences.
    pub fn g2_cross(&self) -> Result<CorrelationResult, EstimateError> {
        let s = self.write_sums()?;
        if s.sum_w == 0 {
            return Err(EstimateError::ZeroMean("write"));
        }
        if s.sum_r == 0 {
            return Err(EstimateError::ZeroMean("read"));
        }
        let (n, sw, sr, swr) = (s.n as f64, s.sum_w as f64, s.sum_r as f64, s.sum_wr as f64);
        let unit = n / (sw * sr);
        let value = swr * unit;
        let std_err = if s.sum_wr == 0 {
            unit
        } else {
            value * (1.0 / swr + 1.0 / sw + 1.0 / sr).sqrt()
        };
        Ok(self.result(Statistic::G2Cross, value, std_err, s.n, "write pulse"))
    }

    /// `⟨n(n − 1)⟩ / ⟨n⟩²` of read clicks after exactly one write click.
    pub fn g2_conditional(&self) -> Result<CorrelationResult, EstimateError> {
        if self.heralded.n == 0 {
            return Err(EstimateError::NoHeralds);
        }
        let (value, std_err) = auto_correlation(self.heralded.n, self.heralded.sum_r, self.heralded.fact_r)
            .ok_or(EstimateError::ZeroMean("heralded read"))?;
        Ok(self.result(
            Statistic::G2Conditional,
            value,
            std_err,
            self.heralded.n,
            "write clicks = 1",
        ))
    }

    /// `⟨n_R | W = 1⟩ − ⟨n_R⟩_no write`.
    pub fn retrieval_efficiency(&self) -> Result<CorrelationResult, EstimateError> {
        if self.heralded.n == 0 {
            return Err(EstimateError::NoHeralds);
        }
        if self.no_write.n == 0 {
            return Err(EstimateError::MissingBaseline);
        }
        let (nh, sh) = (self.heralded.n as f64, self.heralded.sum_r as f64);
        let (nb, sb) = (self.no_write.n as f64, self.no_write.sum_r as f64);
        let value = sh / nh - sb / nb;
        let std_err = (sh / (nh * nh) + sb / (nb * nb)).sqrt();
        Ok(self.result(
            Statistic::RetrievalEfficiency,
            value,
            std_err,
            self.heralded.n + self.no_write.n,
            "write clicks = 1 minus no write",
        ))
    }

    /// Unconditioned `⟨n(n − 1)⟩ / ⟨n⟩²` on one channel of the write-pulse
    /// sequences.
    pub fn g2_unconditional(&self, channel: Channel) -> Result<CorrelationResult, EstimateError> {
        let s = self.write_sums()?;
        let (sum, fact, stat, name) = match channel {
            Channel::Write => (s.sum_w, s.fact_w, Statistic::G2Write, "write"),
            Channel::Read => (s.sum_r, s.fact_r, Statistic::G2Read, "read"),
        };
        let (value, std_err) = auto_correlation(s.n, sum, fact).ok_or(EstimateError::ZeroMean(name))?;
        Ok(self.result(stat, value, std_err, s.n, "write pulse"))
    }

    /// Read-noise auto-correlation from the sequences without write pulse.
    pub fn g2_read_noise(&self) -> Result<CorrelationResult, EstimateError> {
        if self.no_write.n == 0 {
            return Err(EstimateError::MissingBaseline);
        }
        let s = &self.no_write;
        let (value, std_err) =
            auto_correlation(s.n, s.sum_r, s.fact_r).ok_or(EstimateError::ZeroMean("read noise"))?;
        Ok(self.result(Statistic::G2ReadNoise, value, std_err, s.n, "no write"))
    }

    /// `R = g²_WR² / (g²_WW g²_RR)`, first-order error propagation with the
    /// correlations between the three estimates neglected.
    pub fn cauchy_schwarz(&self) -> Result<CorrelationResult, EstimateError> {
        let wr = self.g2_cross()?;
        let ww = self.g2_unconditional(Channel::Write)?;
        let rr = self.g2_unconditional(Channel::Read)?;
        if ww.value == 0.0 {
            return Err(EstimateError::ZeroMean("write pair"));
        }
        if rr.value == 0.0 {
            return Err(EstimateError::ZeroMean("read pair"));
        }
        let value = wr.value * wr.value / (ww.value * rr.value);
        let rel = (4.0 * (wr.std_err / wr.value).powi(2)
            + (ww.std_err / ww.value).powi(2)
            + (rr.std_err / rr.value).powi(2))
        .sqrt();
        let rel = if rel.is_finite() { rel } else { 0.0 };
        Ok(self.result(Statistic::CauchySchwarz, value, value * rel, wr.n_sequences_used, "write pulse"))
    }

    fn mean(&self, statistic: Statistic, sum: u64, n: u64, cond: &str) -> Result<CorrelationResult, EstimateError> {
        if n == 0 {
            return Err(EstimateError::EmptySelection);
        }
        let nf = n as f64;
        let value = sum as f64 / nf;
        Ok(self.result(statistic, value, (sum as f64).sqrt() / nf, n, cond))
    }

    /// `⟨n_W⟩` over write-pulse sequences, all click numbers included.
    pub fn mean_write(&self) -> Result<CorrelationResult, EstimateError> {
        self.mean(Statistic::MeanWrite, self.with_write.sum_w, self.with_write.n, "write pulse")
    }

    pub fn mean_read(&self) -> Result<CorrelationResult, EstimateError> {
        self.mean(Statistic::MeanRead, self.with_write.sum_r, self.with_write.n, "write pulse")
    }

    pub fn mean_read_noise(&self) -> Result<CorrelationResult, EstimateError> {
        self.mean(Statistic::MeanReadNoise, self.no_write.sum_r, self.no_write.n, "no write")
    }
}

/// `g = Σn(n−1)·N / (Σn)²` with Poissonian error. The number of detected
/// click pairs `Σn(n−1)/2` and the number of clicks are treated as Poisson
/// counts. Without any pair the error is the value one double event would
/// have produced. `None` when no click was recorded.
fn auto_correlation(n: u64, sum: u64, fact: u64) -> Option<(f64, f64)> {
    if sum == 0 {
        return None;
    }
    let (nf, s) = (n as f64, sum as f64);
    let unit = nf / (s * s);
    let value = fact as f64 * unit;
    if fact == 0 {
        return Some((0.0, 2.0 * unit));
    }
    let pairs = fact as f64 / 2.0;
    Some((value, value * (1.0 / pairs + 4.0 / s).sqrt()))
}

pub fn estimate_g2_cross(data: &ClickDataset, selection: Selection) -> Result<CorrelationResult, EstimateError> {
    Moments::from_dataset(data, selection)?.g2_cross()
}

pub fn estimate_g2_conditional(
    data: &ClickDataset,
    selection: Selection,
) -> Result<CorrelationResult, EstimateError> {
    Moments::from_dataset(data, selection)?.g2_conditional()
}

/// Retrieval efficiency counting read clicks in the first `window_us` of the
/// pulse, or the whole pulse for `None`.
pub fn estimate_retrieval_efficiency(
    data: &ClickDataset,
    delay_us: Option<f64>,
    window_us: Option<f64>,
) -> Result<CorrelationResult, EstimateError> {
    Moments::from_dataset(data, Selection { delay_us, window_us })?.retrieval_efficiency()
}

pub fn estimate_g2_unconditional(
    data: &ClickDataset,
    channel: Channel,
    selection: Selection,
) -> Result<CorrelationResult, EstimateError> {
    Moments::from_dataset(data, selection)?.g2_unconditional(channel)
}

pub fn cauchy_schwarz_from_data(
    data: &ClickDataset,
    selection: Selection,
) -> Result<CorrelationResult, EstimateError> {
    Moments::from_dataset(data, selection)?.cauchy_schwarz()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::RecordLine;

    fn dataset(pairs: &[(u32, u32, bool)]) -> ClickDataset {
        ClickDataset::from_records(
            pairs.iter().map(|&(w, r, wp)| RecordLine {
                write_clicks: w,
                read_clicks: r,
                delay_us: 10.0,
                write_pulse_present: wp,
                read_time_tags: None,
            }),
            130.0,
        )
        .unwrap()
    }

    #[test]
    fn deterministic_counts_are_uncorrelated() {
        let ds = dataset(&[(1, 1, true); 10]);
        assert_eq!(estimate_g2_cross(&ds, Selection::all()).unwrap().value, 1.0);
        let g = estimate_g2_unconditional(&ds, Channel::Read, Selection::all()).unwrap();
        assert_eq!(g.value, 0.0);
    }

    #[test]
    fn alternating_counts_give_two() {
        let ds = dataset(&[(1, 1, true), (0, 0, true), (1, 1, true), (0, 0, true)]);
        assert_eq!(estimate_g2_cross(&ds, Selection::all()).unwrap().value, 2.0);
    }

    #[test]
    fn zero_double_rule() {
        // 40 heralds, 10 of them followed by a single read click.
        let mut recs = vec![(1, 1, true); 10];
        recs.extend(vec![(1, 0, true); 30]);
        let g = estimate_g2_conditional(&dataset(&recs), Selection::all()).unwrap();
        assert_eq!(g.value, 0.0);
        // One double event would give 2·40/10².
        assert_eq!(g.std_err, 0.8);
    }

    #[test]
    fn conditioning_ignores_other_herald_numbers() {
        let base = vec![(1, 2, true), (1, 1, true), (1, 0, true), (1, 1, true)];
        let g0 = estimate_g2_conditional(&dataset(&base), Selection::all()).unwrap();
        let mut more = base.clone();
        more.extend([(0, 3, true), (2, 5, true), (3, 0, true), (0, 2, false)]);
        let g1 = estimate_g2_conditional(&dataset(&more), Selection::all()).unwrap();
        assert_eq!(g0.value, g1.value);
        assert_eq!(g0.std_err, g1.std_err);
        assert_eq!(g0.value, 2.0 * 4.0 / 16.0);
    }

    #[test]
    fn retrieval_efficiency_needs_baseline() {
        let ds = dataset(&[(1, 1, true), (0, 0, true)]);
        assert_eq!(
            estimate_retrieval_efficiency(&ds, None, None),
            Err(EstimateError::MissingBaseline)
        );
        let ds = dataset(&[(1, 1, true), (1, 0, true), (0, 1, false), (0, 0, false)]);
        let eta = estimate_retrieval_efficiency(&ds, None, None).unwrap();
        assert_eq!(eta.value, 0.0);
        assert!(eta.std_err > 0.0);
    }

    #[test]
    fn windows_need_tags() {
        let ds = dataset(&[(1, 1, true)]);
        assert_eq!(
            estimate_retrieval_efficiency(&ds, None, Some(40.0)),
            Err(EstimateError::MissingTimeTags)
        );
    }

    #[test]
    fn error_conditions() {
        let ds = dataset(&[(0, 0, true), (0, 1, true)]);
        assert_eq!(
            estimate_g2_cross(&ds, Selection::all()),
            Err(EstimateError::ZeroMean("write"))
        );
        assert_eq!(
            estimate_g2_conditional(&ds, Selection::all()),
            Err(EstimateError::NoHeralds)
        );
        assert_eq!(
            estimate_g2_cross(&ds, Selection::at_delay(20.0)),
            Err(EstimateError::EmptySelection)
        );
    }

    #[test]
    fn cauchy_schwarz_on_classical_boundary() {
        let ds = dataset(&[(2, 2, true), (0, 0, true)]);
        let r = cauchy_schwarz_from_data(&ds, Selection::all()).unwrap();
        // g_WR = 2, g_WW = g_RR = 1.
        assert_eq!(r.value, 4.0);
    }

    #[test]
    fn serial_and_parallel_moments_agree() {
        let recs: Vec<_> = (0..5000u32).map(|i| (i % 3, (i * 7) % 4, i % 5 != 0)).collect();
        let ds = dataset(&recs);
        let a = Moments::from_dataset(&ds, Selection::all()).unwrap();
        let b = Moments::from_records(ds.records(), Selection::all()).unwrap();
        assert_eq!(a, b);
    }
}
