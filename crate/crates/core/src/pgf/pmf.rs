//! Truncated joint distribution `P(W = w, R = r)` built by explicit
//! summation over pair numbers, binomial detection and noise convolution.
//! It shares no algebra with the closed forms and serves as their oracle.

use super::{ModelError, ModelParams};

#[derive(Clone, Debug, PartialEq)]
pub struct JointPmf {
    n_max: usize,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn get(&self, w: usize, r: usize) -> f64 {
        self.probs[w * (self.n_max + 1) + r]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn moments(&self) -> PmfMoments {
        let n = self.n_max;
        let (mut m_w, mut m_r, mut m_wr) = (0.0, 0.0, 0.0);
        let (mut f_w, mut f_r) = (0.0, 0.0);
        for w in 0..=n {
            for r in 0..=n {
                let p = self.get(w, r);
                let (wf, rf) = (w as f64, r as f64);
                m_w += wf * p;
                m_r += rf * p;
                m_wr += wf * rf * p;
                f_w += wf * (wf - 1.0) * p;
                f_r += rf * (rf - 1.0) * p;
            }
        }
        let (mut h0, mut h1, mut h2) = (0.0, 0.0, 0.0);
        for r in 0..=n {
            let p = self.get(1, r);
            let rf = r as f64;
            h0 += p;
            h1 += rf * p;
            h2 += rf * (rf - 1.0) * p;
        }
        PmfMoments {
            mean_w: m_w,
            mean_r: m_r,
            g2_cross: m_wr / (m_w * m_r),
            g2_ww: f_w / (m_w * m_w),
            g2_rr: f_r / (m_r * m_r),
            p_single_herald: h0,
            heralded_read_mean: h1 / h0,
            g2_heralded_read: h2 * h0 / (h1 * h1),
        }
    }
}

/// Moments of a [`JointPmf`] table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PmfMoments {
    pub mean_w: f64,
    pub mean_r: f64,
    pub g2_cross: f64,
    pub g2_ww: f64,
    pub g2_rr: f64,
    pub p_single_herald: f64,
    /// `E(R | W = 1)`.
    pub heralded_read_mean: f64,
    /// `E(R(R−1) | W = 1) / E(R | W = 1)²`.
    pub g2_heralded_read: f64,
}

fn binomial_rows(n_max: usize, eta: f64) -> Vec<Vec<f64>> {
    let mut pow_s = vec![1.0; n_max + 1];
    let mut pow_f = vec![1.0; n_max + 1];
    for k in 1..=n_max {
        pow_s[k] = pow_s[k - 1] * eta;
        pow_f[k] = pow_f[k - 1] * (1.0 - eta);
    }
    let mut rows = Vec::with_capacity(n_max + 1);
    let mut binom = vec![1.0];
    for n in 0..=n_max {
        rows.push((0..=n).map(|k| binom[k] * pow_s[k] * pow_f[n - k]).collect());
        let mut next = vec![1.0; n + 2];
        for k in 1..=n {
            next[k] = binom[k - 1] + binom[k];
        }
        binom = next;
    }
    rows
}

/// Detected counts given `n` pairs: binomial thinning convolved with noise.
fn detected_given_pairs(n_max: usize, eta: f64, noise: &[f64]) -> Vec<Vec<f64>> {
    binomial_rows(n_max, eta)
        .into_iter()
        .map(|row| {
            (0..=n_max)
                .map(|c| {
                    (0..=c.min(row.len() - 1))
                        .map(|k| row[k] * noise[c - k])
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// Joint distribution of write and read clicks for `w, r ≤ n_max`, summing
/// pair numbers up to `n_max`.
pub fn joint_pmf(params: &ModelParams, n_max: usize) -> Result<JointPmf, ModelError> {
    params.validate()?;
    if n_max < 1 {
        return Err(ModelError::InvalidParameter {
            name: "n_max",
            value: n_max as f64,
        });
    }
    let noise_a = params.write_noise()?.pmf(n_max);
    let noise_b = params.read_noise()?.pmf(n_max);
    let q_w = detected_given_pairs(n_max, params.eta_x, &noise_a);
    let q_r = detected_given_pairs(n_max, params.eta_y, &noise_b);

    let width = n_max + 1;
    let mut probs = vec![0.0; width * width];
    let ratio = params.mu / (1.0 + params.mu);
    let mut p_pairs = 1.0 / (1.0 + params.mu);
    for n in 0..=n_max {
        for w in 0..width {
            let pw = p_pairs * q_w[n][w];
            if pw == 0.0 {
                continue;
            }
            let row = &mut probs[w * width..(w + 1) * width];
            for (cell, pr) in row.iter_mut().zip(&q_r[n]) {
                *cell += pw * pr;
            }
        }
        p_pairs *= ratio;
    }
    Ok(JointPmf { n_max, probs })
}
