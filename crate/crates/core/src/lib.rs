//! Construction, analysis, and re-synthesis of standard-form quantum states.
//!
//! The crate provides:
//!
//! - [`state`]: a dense state-vector simulator with exact gate application,
//!   amplitude retrieval, and exact or shot-sampled projection probabilities;
//! - [`standard`]: builders for minimal and variant standard states, the
//!   n-CNOT transform embedding an arbitrary state into standard form, a
//!   brute-force decomposition oracle, and a sparse-state synthesizer;
//! - [`sequencer`]: recovery of the hidden qubit order of a minimal standard
//!   state from coefficient ratio tests, plus per-level pair extraction;
//! - [`classifier`]: Bayesian posteriors deciding whether a state plausibly
//!   carries only a small number of variant coefficient pairs;
//! - [`locator`]: an adaptively expanded tree of projection measurements that
//!   pinpoints variant pair locations and magnitudes;
//! - [`io`] and [`report`]: file formats and the JSON analysis report behind
//!   the `stdstate` command-line interface.

pub mod classifier;
pub mod error;
pub mod gate;
pub mod io;
pub mod locator;
pub mod report;
pub mod script;
pub mod sequencer;
pub mod standard;
pub mod state;

pub use error::{Error, Result};
pub use gate::{Gate, GateScript, Unitary2};
pub use standard::{LevelPair, StandardStateSpec, VariantSpec};
pub use state::{SampledProbability, StateVector, MAX_QUBITS};
