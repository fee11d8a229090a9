//! Event-by-event simulation of single-photon beam-splitter and
//! Mach-Zehnder experiments and of two-station photon-pair experiments,
//! together with the time-tagged coincidence analysis used on such data.
//!
//! The simulator never touches wave-function machinery: beam splitters are
//! learning machines processing one message at a time, pair experiments
//! log `(outcome, time-tag, setting)` records per station, and all
//! quantum-looking averages emerge from the analysis of those logs.
//! Closed-form references live in [`oracle`]; every stochastic choice
//! draws from a named stream in [`stream`] so runs replay bit-identically.

// Negated comparisons like `!(x > 0.0)` are deliberate: they reject NaN,
// which the suggested `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod calibrate;
pub mod config;
pub mod curve;
pub mod dataset;
pub mod dlm;
pub mod eprb;
mod error;
pub mod message;
pub mod mzi;
pub mod oracle;
pub mod stream;

pub use error::{Error, Result};
