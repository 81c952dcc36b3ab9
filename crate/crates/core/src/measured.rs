use serde::{Deserialize, Serialize};
use std::fmt;

/// A value with a one-standard-deviation uncertainty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub std_err: f64,
}

impl Measured {
    pub const fn new(value: f64, std_err: f64) -> Self {
        Self { value, std_err }
    }

    pub const fn exact(value: f64) -> Self {
        Self { value, std_err: 0.0 }
    }

    pub fn relative_err(&self) -> f64 {
        self.std_err / self.value.abs()
    }

    /// Number of standard deviations separating `self` from `target`.
    pub fn pull(&self, target: f64) -> f64 {
        (self.value - target) / self.std_err
    }

    pub fn contains(&self, target: f64, n_sigma: f64) -> bool {
        (self.value - target).abs() <= n_sigma * self.std_err
    }
}

impl fmt::Display for Measured {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {}", self.value, self.std_err)
    }
}
