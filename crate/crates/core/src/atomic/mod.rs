//! Magic detuning of the four-wave-mixing Raman coupling.

pub mod angular;
pub mod cesium;
mod faddeeva;
mod raman;
mod scheme_file;

use thiserror::Error;

pub use angular::{clebsch_gordan, wigner_3j, wigner_6j, CgInput, HalfInt, SqrtRational};
pub use faddeeva::faddeeva;
pub use raman::{
    coupling_table, find_magic_detuning, find_static_zero, raman_coupling_doppler,
    raman_coupling_static, MagicReport, RamanLevel, RamanLevelScheme,
};
pub use scheme_file::{format_scheme, parse_scheme};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AtomicError {
    #[error("invalid level scheme: {0}")]
    InvalidScheme(String),
    #[error("detuning {0} MHz is on resonance with a level")]
    OnResonance(f64),
    #[error("empty or invalid detuning range [{lo}, {hi}]")]
    EmptyRange { lo: f64, hi: f64 },
    #[error("|coupling| has no interior minimum in [{lo}, {hi}] MHz")]
    NoInteriorMinimum { lo: f64, hi: f64 },
    #[error("static coupling has no zero in [{lo}, {hi}] MHz")]
    NoZero { lo: f64, hi: f64 },
    #[error("scheme line {line}: {message}")]
    SchemeParse { line: usize, message: String },
}
