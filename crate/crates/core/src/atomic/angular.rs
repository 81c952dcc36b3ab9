//! Exact Clebsch-Gordan, 3j and 6j coefficients.
//!
//! Coefficients are of the form `±√q` with rational `q`, evaluated with the
//! Racah formulas in arbitrary-precision rational arithmetic.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An integer or half-integer, stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HalfInt(i64);

impl HalfInt {
    pub const fn from_twice(twice: i64) -> Self {
        Self(twice)
    }

    pub const fn int(n: i64) -> Self {
        Self(2 * n)
    }

    pub const fn twice(self) -> i64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }
}

impl std::ops::Neg for HalfInt {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("not an integer or half-integer: {0:?}")]
pub struct ParseHalfIntError(String);

impl FromStr for HalfInt {
    type Err = ParseHalfIntError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseHalfIntError(s.to_string());
        let s = s.trim();
        match s.split_once('/') {
            Some((num, "2")) => num.trim().parse::<i64>().map(HalfInt).map_err(|_| err()),
            Some(_) => Err(err()),
            None => s.parse::<i64>().map(HalfInt::int).map_err(|_| err()),
        }
    }
}

/// `sign · √square`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SqrtRational {
    negative: bool,
    square: BigRational,
}

impl SqrtRational {
    pub fn zero() -> Self {
        Self {
            negative: false,
            square: BigRational::zero(),
        }
    }

    /// `sign(sum) · √(prefactor · sum²)`.
    fn from_signed_sum(prefactor: BigRational, sum: BigRational) -> Self {
        let negative = sum.is_negative();
        let square = prefactor * &sum * &sum;
        Self { negative, square }
    }

    pub fn is_zero(&self) -> bool {
        self.square.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.negative && !self.is_zero()
    }

    /// The exact square of the coefficient.
    pub fn square(&self) -> &BigRational {
        &self.square
    }

    /// Square with the sign of the coefficient.
    pub fn signed_square(&self) -> BigRational {
        if self.is_negative() {
            -self.square.clone()
        } else {
            self.square.clone()
        }
    }

    pub fn to_f64(&self) -> f64 {
        let mag = self.square.to_f64().unwrap_or(f64::NAN).sqrt();
        if self.is_negative() {
            -mag
        } else {
            mag
        }
    }

    pub fn neg(mut self) -> Self {
        self.negative = !self.negative;
        self
    }
}

impl fmt::Display for SqrtRational {
    /// `0`, `1`, `-√(3/10)` and so on.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let sign = if self.is_negative() { "-" } else { "" };
        if self.square.is_one() {
            write!(f, "{sign}1")
        } else if self.square.is_integer() {
            write!(f, "{sign}√{}", self.square)
        } else {
            write!(f, "{sign}√({})", self.square)
        }
    }
}

fn factorial(n: i64) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Factorial of a half-integer combination that must be a non-negative
/// integer; twice-values are passed in.
fn fact2(twice: i64) -> BigInt {
    debug_assert!(twice >= 0 && twice % 2 == 0);
    factorial(twice / 2)
}

fn ratio(num: BigInt, den: BigInt) -> BigRational {
    BigRational::new(num, den)
}

fn triangle(a: HalfInt, b: HalfInt, c: HalfInt) -> bool {
    let (a, b, c) = (a.0, b.0, c.0);
    a >= 0 && b >= 0 && c >= 0 && c <= a + b && c >= (a - b).abs() && (a + b + c) % 2 == 0
}

fn projection_ok(j: HalfInt, m: HalfInt) -> bool {
    j.0 >= 0 && m.0.abs() <= j.0 && (j.0 - m.0) % 2 == 0
}

/// Clebsch-Gordan coefficient `⟨j1 m1; j2 m2 | J M⟩`. Combinations violating
/// a selection rule give zero.
pub fn clebsch_gordan(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    j: HalfInt,
    m: HalfInt,
) -> SqrtRational {
    if m.0 != m1.0 + m2.0
        || !triangle(j1, j2, j)
        || !projection_ok(j1, m1)
        || !projection_ok(j2, m2)
        || !projection_ok(j, m)
    {
        return SqrtRational::zero();
    }
    let (j1, m1, j2, m2, j, m) = (j1.0, m1.0, j2.0, m2.0, j.0, m.0);
    let num = BigInt::from(j + 1)
        * fact2(j + j1 - j2)
        * fact2(j - j1 + j2)
        * fact2(j1 + j2 - j)
        * fact2(j + m)
        * fact2(j - m)
        * fact2(j1 - m1)
        * fact2(j1 + m1)
        * fact2(j2 - m2)
        * fact2(j2 + m2);
    let prefactor = ratio(num, fact2(j1 + j2 + j + 2));

    // Summation bounds in units of one (twice-values halved).
    let k_min = 0.max((j2 - j - m1) / 2).max((j1 + m2 - j) / 2);
    let k_max = ((j1 + j2 - j) / 2).min((j1 - m1) / 2).min((j2 + m2) / 2);
    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let k2 = 2 * k;
        let den = factorial(k)
            * fact2(j1 + j2 - j - k2)
            * fact2(j1 - m1 - k2)
            * fact2(j2 + m2 - k2)
            * fact2(j - j2 + m1 + k2)
            * fact2(j - j1 - m2 + k2);
        let term = ratio(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    SqrtRational::from_signed_sum(prefactor, sum)
}

/// Input bundle for [`clebsch_gordan`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CgInput {
    pub j1: HalfInt,
    pub m1: HalfInt,
    pub j2: HalfInt,
    pub m2: HalfInt,
    pub j: HalfInt,
    pub m: HalfInt,
}

impl CgInput {
    pub fn coefficient(&self) -> SqrtRational {
        clebsch_gordan(self.j1, self.m1, self.j2, self.m2, self.j, self.m)
    }
}

/// Wigner 3j symbol.
pub fn wigner_3j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    m1: HalfInt,
    m2: HalfInt,
    m3: HalfInt,
) -> SqrtRational {
    if m1.0 + m2.0 + m3.0 != 0 {
        return SqrtRational::zero();
    }
    let cg = clebsch_gordan(j1, m1, j2, m2, j3, HalfInt(-m3.0));
    if cg.is_zero() {
        return cg;
    }
    // (−1)^{j1 − j2 − m3} / √(2j3 + 1)
    let phase = (j1.0 - j2.0 - m3.0) / 2;
    let SqrtRational { negative, square } = cg;
    let negative = negative ^ (phase.rem_euclid(2) == 1);
    SqrtRational {
        negative,
        square: square / BigRational::from_integer(BigInt::from(j3.0 + 1)),
    }
}

fn delta_squared(a: i64, b: i64, c: i64) -> BigRational {
    ratio(
        fact2(a + b - c) * fact2(a - b + c) * fact2(-a + b + c),
        fact2(a + b + c + 2),
    )
}

/// Wigner 6j symbol `{j1 j2 j3; j4 j5 j6}`.
pub fn wigner_6j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    j4: HalfInt,
    j5: HalfInt,
    j6: HalfInt,
) -> SqrtRational {
    if !(triangle(j1, j2, j3) && triangle(j1, j5, j6) && triangle(j4, j2, j6) && triangle(j4, j5, j3))
    {
        return SqrtRational::zero();
    }
    let (j1, j2, j3, j4, j5, j6) = (j1.0, j2.0, j3.0, j4.0, j5.0, j6.0);
    let prefactor = delta_squared(j1, j2, j3)
        * delta_squared(j1, j5, j6)
        * delta_squared(j4, j2, j6)
        * delta_squared(j4, j5, j3);
    let a = [j1 + j2 + j3, j1 + j5 + j6, j4 + j2 + j6, j4 + j5 + j3].map(|x| x / 2);
    let b = [j1 + j2 + j4 + j5, j2 + j3 + j5 + j6, j3 + j1 + j6 + j4].map(|x| x / 2);
    let t_min = *a.iter().max().expect("four entries");
    let t_max = *b.iter().min().expect("three entries");
    let mut sum = BigRational::zero();
    for t in t_min..=t_max {
        let mut den = BigInt::one();
        for &ai in &a {
            den *= factorial(t - ai);
        }
        for &bi in &b {
            den *= factorial(bi - t);
        }
        let term = ratio(factorial(t + 1), den);
        if t % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    SqrtRational::from_signed_sum(prefactor, sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(twice: i64) -> HalfInt {
        HalfInt::from_twice(twice)
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn spin_half_singlet() {
        let c = clebsch_gordan(h(1), h(1), h(1), h(-1), h(0), h(0));
        assert_eq!(c.signed_square(), q(1, 2));
        let c = clebsch_gordan(h(1), h(-1), h(1), h(1), h(0), h(0));
        assert_eq!(c.signed_square(), q(-1, 2));
        assert!((clebsch_gordan(h(1), h(1), h(1), h(-1), h(0), h(0)).to_f64()
            - std::f64::consts::FRAC_1_SQRT_2)
            .abs()
            < 1e-16);
    }

    #[test]
    fn display_forms() {
        assert_eq!(clebsch_gordan(h(1), h(-1), h(1), h(1), h(0), h(0)).to_string(), "-√(1/2)");
        assert_eq!(clebsch_gordan(h(2), h(2), h(2), h(2), h(4), h(4)).to_string(), "1");
        assert_eq!(SqrtRational::zero().to_string(), "0");
        assert_eq!((-h(3)).to_string(), "-3/2");
    }

    #[test]
    fn selection_rules_give_zero() {
        assert!(clebsch_gordan(h(2), h(0), h(2), h(2), h(2), h(0)).is_zero());
        assert!(clebsch_gordan(h(2), h(0), h(2), h(0), h(6), h(0)).is_zero());
        assert!(clebsch_gordan(h(2), h(4), h(2), h(0), h(4), h(4)).is_zero());
        // ⟨1 0; 1 0 | 1 0⟩ vanishes by parity.
        assert!(clebsch_gordan(h(2), h(0), h(2), h(0), h(2), h(0)).is_zero());
    }

    #[test]
    fn textbook_values() {
        // ⟨1 1; 1 −1 | 2 0⟩ = 1/√6, ⟨1 0; 1/2 1/2 | 3/2 1/2⟩ = √(2/3)
        assert_eq!(clebsch_gordan(h(2), h(2), h(2), h(-2), h(4), h(0)).signed_square(), q(1, 6));
        assert_eq!(clebsch_gordan(h(2), h(0), h(1), h(1), h(3), h(1)).signed_square(), q(2, 3));
        assert_eq!(clebsch_gordan(h(2), h(0), h(1), h(1), h(1), h(1)).signed_square(), q(-1, 3));
    }

    #[test]
    fn six_j_values() {
        // {1/2 1/2 1; 1/2 1/2 0} = 1/2 ... with sign (−1)^{j1+j2+j3}.
        let s = wigner_6j(h(1), h(1), h(2), h(1), h(1), h(0));
        assert_eq!(s.signed_square(), q(1, 4));
        // {1 1 1; 1 1 1} = 1/6
        assert_eq!(wigner_6j(h(2), h(2), h(2), h(2), h(2), h(2)).signed_square(), q(1, 36));
        assert!(wigner_6j(h(2), h(2), h(8), h(2), h(2), h(2)).is_zero());
    }

    #[test]
    fn three_j_relation() {
        let s = wigner_3j(h(2), h(2), h(0), h(2), h(-2), h(0));
        assert_eq!(s.signed_square(), q(1, 3));
    }

    #[test]
    fn parse_half_integers() {
        assert_eq!("7/2".parse::<HalfInt>().unwrap(), h(7));
        assert_eq!("-3".parse::<HalfInt>().unwrap(), h(-6));
        assert!("1/3".parse::<HalfInt>().is_err());
        assert_eq!(h(7).to_string(), "7/2");
    }
}
