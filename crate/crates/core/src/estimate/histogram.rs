use serde::{Deserialize, Serialize};

use super::EstimateError;
use crate::dataset::ClickDataset;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    /// Every sequence with a write pulse.
    WritePulse,
    /// Write-pulse sequences with exactly one write click.
    Herald,
    NoWrite,
    All,
}

impl Conditioning {
    fn accepts(self, write_pulse_present: bool, write_clicks: u32) -> bool {
        match self {
            Self::WritePulse => write_pulse_present,
            Self::Herald => write_pulse_present && write_clicks == 1,
            Self::NoWrite => !write_pulse_present,
            Self::All => true,
        }
    }
}

/// Read clicks per sequence and bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TagHistogram {
    pub bin_us: f64,
    pub conditioning: Conditioning,
    pub n_sequences: u64,
    /// Bin lower edges.
    pub edges_us: Vec<f64>,
    pub counts: Vec<u64>,
    /// `counts / n_sequences` (zero if no sequence was selected).
    pub rates: Vec<f64>,
}

pub fn histogram_time_tags(
    data: &ClickDataset,
    bin_us: f64,
    conditioning: Conditioning,
    delay_us: Option<f64>,
) -> Result<TagHistogram, EstimateError> {
    if !(bin_us.is_finite() && bin_us > 0.0) {
        return Err(EstimateError::InvalidBinWidth(bin_us));
    }
    if !data.has_time_tags() {
        return Err(EstimateError::MissingTimeTags);
    }
    let pulse = data.read_pulse_us();
    let n_bins = ((pulse / bin_us).ceil() as usize).max(1);
    let mut counts = vec![0u64; n_bins];
    let mut n_sequences = 0u64;
    for rec in data.records() {
        if delay_us.is_some_and(|d| d != rec.delay_us)
            || !conditioning.accepts(rec.write_pulse_present, rec.write_clicks)
        {
            continue;
        }
        n_sequences += 1;
        for &t in rec.read_time_tags.unwrap_or(&[]) {
            let k = ((t / bin_us) as usize).min(n_bins - 1);
            counts[k] += 1;
        }
    }
    let rates = counts
        .iter()
        .map(|&c| if n_sequences == 0 { 0.0 } else { c as f64 / n_sequences as f64 })
        .collect();
    Ok(TagHistogram {
        bin_us,
        conditioning,
        n_sequences,
        edges_us: (0..n_bins).map(|k| k as f64 * bin_us).collect(),
        counts,
        rates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::RecordLine;

    #[test]
    fn bins_and_conditioning() {
        let recs = vec![
            RecordLine {
                write_clicks: 1,
                read_clicks: 2,
                delay_us: 10.0,
                write_pulse_present: true,
                read_time_tags: Some(vec![0.5, 8.0]),
            },
            RecordLine {
                write_clicks: 0,
                read_clicks: 1,
                delay_us: 10.0,
                write_pulse_present: false,
                read_time_tags: Some(vec![130.0]),
            },
        ];
        let ds = ClickDataset::from_records(recs, 130.0).unwrap();
        let h = histogram_time_tags(&ds, 7.0, Conditioning::Herald, None).unwrap();
        assert_eq!(h.counts.len(), 19);
        assert_eq!(h.counts[0], 1);
        assert_eq!(h.counts[1], 1);
        assert_eq!(h.n_sequences, 1);
        let h = histogram_time_tags(&ds, 1.0, Conditioning::NoWrite, None).unwrap();
        assert_eq!(h.counts[129], 1);
        let h = histogram_time_tags(&ds, 1.0, Conditioning::All, Some(20.0)).unwrap();
        assert!(h.rates.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn untagged_data_is_rejected() {
        let recs = vec![RecordLine {
            write_clicks: 0,
            read_clicks: 0,
            delay_us: 10.0,
            write_pulse_present: true,
            read_time_tags: None,
        }];
        let ds = ClickDataset::from_records(recs, 130.0).unwrap();
        assert_eq!(
            histogram_time_tags(&ds, 1.0, Conditioning::All, None),
            Err(EstimateError::MissingTimeTags)
        );
    }
}
