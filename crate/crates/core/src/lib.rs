//! Modelling, simulation and analysis of a heralded single-photon source with
//! a built-in atomic memory (a DLCZ-type write/read scheme).
//!
//! The crate is organised by capability:
//!
//! - [`pgf`]: closed-form photon statistics of a two-mode squeezed state with
//!   independent detected noise, derived from probability generating
//!   functions, plus a brute-force joint PMF used as an oracle.
//! - [`sim`]: Monte Carlo generation of number-resolved, optionally
//!   time-tagged click records.
//! - [`dataset`]: the click-record container and its JSON-lines / CSV formats.
//! - [`estimate`]: correlation functions and retrieval efficiency estimated
//!   from click records, with Poissonian uncertainties.
//! - [`fit`]: Levenberg-Marquardt fitting of spectra, noise lines, memory
//!   decays and the detection-efficiency calibration.
//! - [`atomic`]: the magic-detuning calculation (Faddeeva function,
//!   Clebsch-Gordan coefficients, Raman couplings).
//! - [`cli`]: end-to-end commands behind the `dlcz` binary.
//!
//! Runnable walkthroughs for each capability live in `examples/`
//! (`cargo run --example <name>`).

pub mod atomic;
pub mod cli;
pub mod dataset;
pub mod estimate;
pub mod fit;
pub mod measured;
pub mod pgf;
pub mod sim;

pub use dataset::{ClickDataset, SequenceBlock, SequenceRecord};
pub use measured::Measured;
pub use pgf::{EfficiencyChain, ModelParams, WriteNoiseLine};
pub use sim::SimConfig;
