//! Concrete counting laws for detected noise.
//!
//! The closed forms only need a noise mean and its g²; the oracle and the
//! simulator need an actual distribution. A noise source with
//! `1 ≤ g² ≤ 2` is realised as independent Poissonian and thermal parts,
//! `g² > 2` as a thermal burst that is present only in a fraction of the
//! sequences.

use rand::Rng;
use rand_distr::{Distribution, Geometric, Poisson};

use super::ModelError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseLaw {
    /// Poissonian plus independent thermal counts. `g² = 1 + (thermal/mean)²`.
    Superposed { poisson_mean: f64, thermal_mean: f64 },
    /// A thermal field present with probability `duty`, vacuum otherwise.
    /// `g² = 2 / duty`.
    Gated { duty: f64, thermal_mean: f64 },
}

impl NoiseLaw {
    pub fn from_moments(mean: f64, g2: f64) -> Result<Self, ModelError> {
        if !(mean.is_finite() && mean >= 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "noise mean",
                value: mean,
            });
        }
        if mean == 0.0 {
            return Ok(Self::Superposed {
                poisson_mean: 0.0,
                thermal_mean: 0.0,
            });
        }
        if !(g2.is_finite() && g2 >= 1.0) {
            return Err(ModelError::UnrealizableNoise { mean, g2 });
        }
        if g2 <= 2.0 {
            let thermal_mean = mean * (g2 - 1.0).sqrt();
            Ok(Self::Superposed {
                poisson_mean: mean - thermal_mean,
                thermal_mean,
            })
        } else {
            let duty = 2.0 / g2;
            Ok(Self::Gated {
                duty,
                thermal_mean: mean / duty,
            })
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Superposed {
                poisson_mean,
                thermal_mean,
            } => poisson_mean + thermal_mean,
            Self::Gated { duty, thermal_mean } => duty * thermal_mean,
        }
    }

    pub fn g2(&self) -> f64 {
        let m = self.mean();
        if m == 0.0 {
            return 1.0;
        }
        match *self {
            Self::Superposed { thermal_mean, .. } => 1.0 + (thermal_mean / m).powi(2),
            Self::Gated { duty, .. } => 2.0 / duty,
        }
    }

    /// Generating function `E[s^N]`.
    pub fn pgf(&self, s: f64) -> f64 {
        match *self {
            Self::Superposed {
                poisson_mean,
                thermal_mean,
            } => (poisson_mean * (s - 1.0)).exp() / (1.0 + thermal_mean * (1.0 - s)),
            Self::Gated { duty, thermal_mean } => {
                1.0 - duty + duty / (1.0 + thermal_mean * (1.0 - s))
            }
        }
    }

    /// `P(N = 1) / P(N = 0)`, the quantity through which the noise law enters
    /// the statistics conditioned on a single herald click.
    pub fn single_to_vacuum_ratio(&self) -> f64 {
        match *self {
            Self::Superposed {
                poisson_mean,
                thermal_mean,
            } => poisson_mean + thermal_mean / (1.0 + thermal_mean),
            Self::Gated { duty, thermal_mean } => {
                let q = thermal_mean / (1.0 + thermal_mean);
                let p0 = 1.0 - duty + duty / (1.0 + thermal_mean);
                duty * q / (1.0 + thermal_mean) / p0
            }
        }
    }

    /// Probabilities `P(N = n)` for `n = 0..=n_max`.
    pub fn pmf(&self, n_max: usize) -> Vec<f64> {
        let thermal = |mean: f64| -> Vec<f64> {
            let q = mean / (1.0 + mean);
            let mut p = Vec::with_capacity(n_max + 1);
            let mut term = 1.0 / (1.0 + mean);
            for _ in 0..=n_max {
                p.push(term);
                term *= q;
            }
            p
        };
        match *self {
            Self::Superposed {
                poisson_mean,
                thermal_mean,
            } => {
                let mut poisson = Vec::with_capacity(n_max + 1);
                let mut term = (-poisson_mean).exp();
                for k in 0..=n_max {
                    poisson.push(term);
                    term *= poisson_mean / (k + 1) as f64;
                }
                let th = thermal(thermal_mean);
                (0..=n_max)
                    .map(|n| (0..=n).map(|k| poisson[k] * th[n - k]).sum())
                    .collect()
            }
            Self::Gated { duty, thermal_mean } => {
                let mut p: Vec<f64> = thermal(thermal_mean).iter().map(|x| duty * x).collect();
                p[0] += 1.0 - duty;
                p
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            Self::Superposed {
                poisson_mean,
                thermal_mean,
            } => sample_poisson(poisson_mean, rng) + sample_thermal(thermal_mean, rng),
            Self::Gated { duty, thermal_mean } => {
                if rng.random::<f64>() < duty {
                    sample_thermal(thermal_mean, rng)
                } else {
                    0
                }
            }
        }
    }
}

pub(crate) fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    // Poisson::new only fails for non-positive or non-finite means.
    Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
}

/// Geometric (Bose-Einstein) counts with the given mean.
pub(crate) fn sample_thermal<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Geometric::new(1.0 / (1.0 + mean))
        .expect("success probability in (0, 1]")
        .sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn moments(p: &[f64]) -> (f64, f64) {
        let m: f64 = p.iter().enumerate().map(|(n, x)| n as f64 * x).sum();
        let f2: f64 = p
            .iter()
            .enumerate()
            .map(|(n, x)| (n * n.saturating_sub(1)) as f64 * x)
            .sum();
        (m, f2 / (m * m))
    }

    #[test]
    fn realised_laws_hit_target_moments() {
        for &(mean, g2) in &[(0.3, 1.0), (0.3, 1.5), (0.7, 2.0), (0.2, 3.5)] {
            let law = NoiseLaw::from_moments(mean, g2).unwrap();
            assert_relative_eq!(law.mean(), mean, max_relative = 1e-14);
            assert_relative_eq!(law.g2(), g2, max_relative = 1e-12);
            let (m, g) = moments(&law.pmf(200));
            assert_relative_eq!(m, mean, max_relative = 1e-12);
            assert_relative_eq!(g, g2, max_relative = 1e-10);
            let p = law.pmf(2);
            assert_relative_eq!(law.single_to_vacuum_ratio(), p[1] / p[0], max_relative = 1e-12);
            assert_relative_eq!(law.pgf(0.0), p[0], max_relative = 1e-12);
        }
    }

    #[test]
    fn sub_poissonian_noise_is_rejected() {
        assert!(matches!(
            NoiseLaw::from_moments(0.1, 0.5),
            Err(ModelError::UnrealizableNoise { .. })
        ));
        assert!(NoiseLaw::from_moments(0.0, 0.5).is_ok());
    }

    #[test]
    fn poissonian_ratio_is_the_mean() {
        let law = NoiseLaw::from_moments(0.013, 1.0).unwrap();
        assert_relative_eq!(law.single_to_vacuum_ratio(), 0.013, max_relative = 1e-15);
    }
}
