//! Monte Carlo click records.
//!
//! Each sequence draws a thermal number of pairs, thins them binomially on
//! both arms and adds independently drawn noise. Stored excitations survive
//! the delay with probability `exp(−τ_D/τ_M)`, and the read noise mean grows
//! linearly with the delay.
//!
//! Sequences are generated in fixed chunks of [`CHUNK_LEN`], chunk `k` using
//! a ChaCha8 stream `k` of the configured seed. The output therefore does not
//! depend on how many threads run the chunks.

mod envelope;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use envelope::{
    exp_fraction, ramp_fraction, sample_linear_ramp, sample_truncated_exp, TagSource,
};

use crate::dataset::{ClickDataset, DatasetBuilder, DatasetError, SequenceBlock};
use crate::pgf::{sample_thermal, ModelError, ModelParams, NoiseLaw};

pub const CHUNK_LEN: usize = 8192;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Split of the read noise into an envelope-shaped (symmetric) part and a
/// linearly growing (asymmetric) part, and growth of its mean with delay.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseGrowth {
    pub symmetric_fraction: f64,
    /// Relative increase of the read noise mean per µs of delay:
    /// `λ_B(τ_D) = λ_B · (1 + linear_rate · τ_D)`.
    pub linear_rate: f64,
}

impl Default for NoiseGrowth {
    fn default() -> Self {
        Self {
            symmetric_fraction: 0.5,
            linear_rate: 0.0,
        }
    }
}

fn default_window() -> f64 {
    40.0
}
fn default_pulse() -> f64 {
    130.0
}
fn default_envelope() -> Option<f64> {
    Some(10.0)
}
fn default_true() -> bool {
    true
}
fn default_delay() -> f64 {
    10.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: ModelParams,
    pub n_sequences: u64,
    #[serde(default = "default_delay")]
    pub delay_us: f64,
    /// Lifetime of the stored excitation; `None` disables decay.
    #[serde(default)]
    pub memory_tau_us: Option<f64>,
    #[serde(default = "default_window")]
    pub read_window_us: f64,
    #[serde(default = "default_pulse")]
    pub read_pulse_us: f64,
    /// Decay constant of the retrieval envelope; `None` gives a flat envelope.
    #[serde(default = "default_envelope")]
    pub envelope_decay_us: Option<f64>,
    #[serde(default)]
    pub noise_growth: NoiseGrowth,
    #[serde(default = "default_true")]
    pub write_pulse_present: bool,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub record_time_tags: bool,
}

impl SimConfig {
    pub fn new(model: ModelParams, n_sequences: u64, rng_seed: u64) -> Self {
        Self {
            model,
            n_sequences,
            delay_us: default_delay(),
            memory_tau_us: None,
            read_window_us: default_window(),
            read_pulse_us: default_pulse(),
            envelope_decay_us: default_envelope(),
            noise_growth: NoiseGrowth::default(),
            write_pulse_present: true,
            rng_seed,
            record_time_tags: false,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.model.validate()?;
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if self.n_sequences == 0 {
            return bad("n_sequences must be positive".into());
        }
        if !(self.delay_us.is_finite() && self.delay_us >= 0.0) {
            return bad(format!("delay_us = {}", self.delay_us));
        }
        if !(self.read_pulse_us.is_finite() && self.read_pulse_us > 0.0) {
            return bad(format!("read_pulse_us = {}", self.read_pulse_us));
        }
        if !(self.read_window_us > 0.0 && self.read_window_us <= self.read_pulse_us) {
            return bad(format!(
                "read_window_us = {} must lie in (0, read_pulse_us]",
                self.read_window_us
            ));
        }
        for (name, v) in [
            ("memory_tau_us", self.memory_tau_us),
            ("envelope_decay_us", self.envelope_decay_us),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return bad(format!("{name} = {v} must be positive"));
                }
            }
        }
        let f = self.noise_growth.symmetric_fraction;
        if !(0.0..=1.0).contains(&f) {
            return bad(format!("symmetric_fraction = {f}"));
        }
        let g = self.noise_growth.linear_rate;
        if !(g.is_finite() && g >= 0.0) {
            return bad(format!("linear_rate = {g}"));
        }
        Ok(())
    }

    /// Survival probability of a stored excitation over the delay.
    pub fn survival(&self) -> f64 {
        match self.memory_tau_us {
            Some(tau) => apply_memory_decay(1.0, self.delay_us, tau),
            None => 1.0,
        }
    }

    pub fn read_noise_mean(&self) -> f64 {
        self.model.lambda_b * (1.0 + self.noise_growth.linear_rate * self.delay_us)
    }

    /// Closed-form model for the full read pulse at the configured delay.
    /// Without a write pulse the pair mean is zero.
    pub fn model_at_delay(&self) -> ModelParams {
        ModelParams {
            mu: if self.write_pulse_present { self.model.mu } else { 0.0 },
            eta_y: self.model.eta_y * self.survival(),
            lambda_b: self.read_noise_mean(),
            ..self.model
        }
    }

    /// Fraction of retrieved light inside the first `window_us` of the pulse.
    pub fn retrieval_fraction(&self, window_us: f64) -> f64 {
        exp_fraction(self.envelope_decay_us, window_us, self.read_pulse_us)
    }

    /// Fraction of read noise inside the first `window_us` of the pulse.
    pub fn noise_fraction(&self, window_us: f64) -> f64 {
        let f = self.noise_growth.symmetric_fraction;
        f * self.retrieval_fraction(window_us)
            + (1.0 - f) * ramp_fraction(self.delay_us, window_us, self.read_pulse_us)
    }

    /// Closed-form model restricted to the first `window_us` of the pulse.
    /// Window placement is independent per click, so truncation is binomial
    /// thinning and the noise g² is unchanged.
    pub fn model_in_window(&self, window_us: f64) -> ModelParams {
        let full = self.model_at_delay();
        ModelParams {
            eta_y: full.eta_y * self.retrieval_fraction(window_us),
            lambda_b: full.lambda_b * self.noise_fraction(window_us),
            ..full
        }
    }

    fn block(&self) -> SequenceBlock {
        SequenceBlock {
            delay_us: self.delay_us,
            write_pulse_present: self.write_pulse_present,
            n_sequences: self.n_sequences,
            seed: Some(self.rng_seed),
        }
    }
}

/// `μ₀ · exp(−τ_D/τ)`.
pub fn apply_memory_decay(mu0: f64, delay_us: f64, tau_us: f64) -> f64 {
    mu0 * (-delay_us / tau_us).exp()
}

/// `n_clicks` sorted arrival times from the given source.
pub fn sample_time_tags<R: Rng + ?Sized>(
    n_clicks: usize,
    config: &SimConfig,
    source: TagSource,
    rng: &mut R,
) -> Vec<f64> {
    let mut tags: Vec<f64> = (0..n_clicks)
        .map(|_| match source {
            TagSource::Retrieval | TagSource::SymNoise => {
                sample_truncated_exp(config.envelope_decay_us, config.read_pulse_us, rng)
            }
            TagSource::AsymNoise => sample_linear_ramp(config.delay_us, config.read_pulse_us, rng),
        })
        .collect();
    tags.sort_by(f64::total_cmp);
    tags
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Serial,
    Parallel,
}

struct Laws {
    write_noise: NoiseLaw,
    read_noise: NoiseLaw,
    read_eta: f64,
}

#[derive(Default)]
struct Chunk {
    write: Vec<u32>,
    read: Vec<u32>,
    tag_lens: Vec<usize>,
    tags: Vec<f64>,
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p == 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    if n <= 32 {
        return (0..n).filter(|_| rng.random::<f64>() < p).count() as u64;
    }
    Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
}

fn counts_u32(n: u64) -> u32 {
    u32::try_from(n).unwrap_or(u32::MAX)
}

fn simulate_chunk(config: &SimConfig, laws: &Laws, index: usize, len: usize) -> Chunk {
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    rng.set_stream(index as u64);
    let mut out = Chunk {
        write: Vec::with_capacity(len),
        read: Vec::with_capacity(len),
        ..Chunk::default()
    };
    let mu = config.model.mu;
    let f_sym = config.noise_growth.symmetric_fraction;
    for _ in 0..len {
        let pairs = if config.write_pulse_present {
            sample_thermal(mu, &mut rng)
        } else {
            0
        };
        let w = binomial(pairs, config.model.eta_x, &mut rng) + laws.write_noise.sample(&mut rng);
        let retrieved = binomial(pairs, laws.read_eta, &mut rng);
        let noise = laws.read_noise.sample(&mut rng);
        out.write.push(counts_u32(w));
        out.read.push(counts_u32(retrieved + noise));
        if config.record_time_tags {
            let start = out.tags.len();
            for _ in 0..retrieved {
                out.tags.push(sample_truncated_exp(
                    config.envelope_decay_us,
                    config.read_pulse_us,
                    &mut rng,
                ));
            }
            for _ in 0..noise {
                let t = if rng.random::<f64>() < f_sym {
                    sample_truncated_exp(config.envelope_decay_us, config.read_pulse_us, &mut rng)
                } else {
                    sample_linear_ramp(config.delay_us, config.read_pulse_us, &mut rng)
                };
                out.tags.push(t);
            }
            out.tags[start..].sort_by(f64::total_cmp);
            out.tag_lens.push(out.tags.len() - start);
        }
    }
    out
}

fn push_config(
    builder: &mut DatasetBuilder,
    config: &SimConfig,
    execution: Execution,
) -> Result<(), SimError> {
    config.validate()?;
    let model = config.model_at_delay();
    let laws = Laws {
        write_noise: model.write_noise()?,
        read_noise: model.read_noise()?,
        read_eta: model.eta_y,
    };
    let n = usize::try_from(config.n_sequences)
        .map_err(|_| SimError::InvalidConfig("n_sequences too large".into()))?;
    let n_chunks = n.div_ceil(CHUNK_LEN);
    let job = |k: usize| {
        let len = CHUNK_LEN.min(n - k * CHUNK_LEN);
        simulate_chunk(config, &laws, k, len)
    };
    let chunks: Vec<Chunk> = match execution {
        Execution::Serial => (0..n_chunks).map(job).collect(),
        Execution::Parallel => (0..n_chunks).into_par_iter().map(job).collect(),
    };
    let block = builder.add_block(config.block())?;
    builder.reserve(n);
    for chunk in &chunks {
        let mut offset = 0;
        for i in 0..chunk.write.len() {
            let tags = if config.record_time_tags {
                let len = chunk.tag_lens[i];
                let t = &chunk.tags[offset..offset + len];
                offset += len;
                Some(t)
            } else {
                None
            };
            builder.push_raw(block, chunk.write[i], chunk.read[i], tags);
        }
    }
    Ok(())
}

pub fn simulate(config: &SimConfig) -> Result<ClickDataset, SimError> {
    simulate_with(config, Execution::Parallel)
}

pub fn simulate_with(config: &SimConfig, execution: Execution) -> Result<ClickDataset, SimError> {
    let mut builder = DatasetBuilder::new(config.read_pulse_us, config.record_time_tags);
    push_config(&mut builder, config, execution)?;
    Ok(builder.finish()?)
}

/// Simulates each block and interleaves the sequences round-robin, as in an
/// acquisition alternating between settings (e.g. with and without write).
pub fn simulate_interleaved(configs: &[SimConfig]) -> Result<ClickDataset, SimError> {
    let first = configs
        .first()
        .ok_or_else(|| SimError::InvalidConfig("no sequence blocks".into()))?;
    if configs.iter().any(|c| {
        c.read_pulse_us != first.read_pulse_us || c.record_time_tags != first.record_time_tags
    }) {
        return Err(SimError::InvalidConfig(
            "interleaved blocks must share read pulse length and time tagging".into(),
        ));
    }
    let parts = configs.iter().map(simulate).collect::<Result<Vec<_>, _>>()?;
    Ok(ClickDataset::interleave(parts)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn memory_decay_examples() {
        assert_eq!(apply_memory_decay(1.0, 0.0, 50.0), 1.0);
        assert_eq!(apply_memory_decay(1.0, 50.0, 50.0), (-1.0f64).exp());
        assert_eq!(apply_memory_decay(0.5, 100.0, 500.0), 0.5 * (-0.2f64).exp());
    }

    #[test]
    fn vacuum_gives_empty_records() {
        let cfg = SimConfig::new(ModelParams::default(), 20_000, 1);
        let ds = simulate(&cfg).unwrap();
        assert_eq!(ds.len(), 20_000);
        assert!(ds.records().all(|r| r.write_clicks == 0 && r.read_clicks == 0));
    }

    #[test]
    fn lossless_pairs_match_exactly() {
        let cfg = SimConfig::new(ModelParams::lossless(1.0), 50_000, 2);
        let ds = simulate(&cfg).unwrap();
        assert!(ds.records().all(|r| r.write_clicks == r.read_clicks));
    }

    #[test]
    fn serial_and_parallel_agree() {
        let mut cfg = SimConfig::new(
            ModelParams {
                mu: 0.3,
                lambda_a: 0.01,
                lambda_b: 0.02,
                eta_x: 0.5,
                eta_y: 0.4,
                g2_aa: 1.0,
                g2_bb: 1.7,
            },
            3 * CHUNK_LEN as u64 + 17,
            42,
        );
        cfg.record_time_tags = true;
        assert_eq!(
            simulate_with(&cfg, Execution::Serial).unwrap(),
            simulate_with(&cfg, Execution::Parallel).unwrap()
        );
    }

    #[test]
    fn no_write_sequences_have_pure_noise() {
        let mut cfg = SimConfig::new(
            ModelParams {
                mu: 0.5,
                lambda_a: 0.0,
                ..ModelParams::lossless(0.5)
            },
            20_000,
            5,
        );
        cfg.write_pulse_present = false;
        let ds = simulate(&cfg).unwrap();
        assert!(ds.records().all(|r| r.write_clicks == 0 && r.read_clicks == 0));
    }

    #[test]
    fn tags_are_recorded_per_click() {
        let mut cfg = SimConfig::new(
            ModelParams {
                lambda_b: 0.5,
                ..ModelParams::lossless(0.5)
            },
            5_000,
            8,
        );
        cfg.record_time_tags = true;
        let ds = simulate(&cfg).unwrap();
        for r in ds.records() {
            let tags = r.read_time_tags.unwrap();
            assert_eq!(tags.len(), r.read_clicks as usize);
            assert!(tags.windows(2).all(|w| w[0] <= w[1]));
            assert!(tags.iter().all(|&t| (0.0..=130.0).contains(&t)));
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = SimConfig::new(ModelParams::lossless(0.1), 10, 0);
        cfg.read_window_us = 200.0;
        assert!(simulate(&cfg).is_err());
        let cfg = SimConfig::new(ModelParams::lossless(0.1), 0, 0);
        assert!(simulate(&cfg).is_err());
    }

    #[test]
    fn window_model_scales_signal_and_noise() {
        let mut cfg = SimConfig::new(
            ModelParams {
                lambda_b: 0.01,
                eta_y: 0.5,
                ..ModelParams::lossless(0.1)
            },
            1,
            0,
        );
        cfg.delay_us = 0.0;
        assert_eq!(cfg.model_in_window(130.0), cfg.model_at_delay());
        let m = cfg.model_in_window(40.0);
        assert!(m.eta_y < 0.5 && m.lambda_b < 0.01);
    }
}
