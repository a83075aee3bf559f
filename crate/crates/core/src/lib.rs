//! # ofwl-core
//!
//! Software simulator of an opto-electronic fixed-weight-learning neural
//! network test bench.
//!
//! The hardware being modeled multiplies signals by passing laser light
//! through an attenuating mask (a Stanford-style optical matrix multiplier)
//! and keeps every synaptic weight fixed; learning happens in recurrent
//! signal loops whose fixed weights encode an online backpropagation rule.
//! This crate reproduces that signal path numerically:
//!
//! - [`pulse`] — stochastic pulse trains: Bernoulli encoding, AND-gate
//!   products, attenuated (modified) pulses, and the estimator-stddev oracle
//!   used by every statistical test.
//! - [`optics`] — the optical stage: input quantization, dual-rail weight
//!   masks, detector summation with differential subtraction, logistic
//!   saturation squashing, and the throughput calculator.
//! - [`network`] — recurrent netlists with per-edge integer delays and the
//!   macro-step executor (exact reference route and hardware signal route).
//! - [`subnet`] — the sub-network method: train small feed-forward fragments
//!   in float arithmetic, then compose them with explicit signal delays into
//!   complete fixed-weight learners.
//! - [`zoo`] — builders for the reproduced networks (uMULT, Sigma-And,
//!   PlanTran, BooLean), task data generators, and the changing-weight
//!   online-backprop baseline.
//! - [`harness`] — experiment configs, convergence detection, suite runner,
//!   and CSV/JSON reporting.

pub mod error;
pub mod harness;
pub mod network;
pub mod optics;
pub mod pulse;
pub mod rng;
pub mod subnet;
pub mod zoo;

pub use error::{Error, Result};
