//! Event-driven spike-timing-dependent plasticity laboratory.
//!
//! The crate evaluates the classical pair rule and the trace-based triplet
//! rule (full and minimal variants) over arbitrary spike trains, simulates a
//! behavioral model of the analog pair/triplet STDP circuits, and fits either
//! against biological plasticity datasets by minimizing the normalized mean
//! square error. Monte-Carlo mismatch studies sit on top of the circuit model.

pub mod circuit;
pub mod data_io;
pub mod error;
pub mod fitting;
pub mod montecarlo;
pub mod params;
pub mod protocols;
pub mod rules;
pub mod svg;
pub mod train;
pub mod units;

pub use error::{Error, Result};
pub use train::SpikeTrain;
