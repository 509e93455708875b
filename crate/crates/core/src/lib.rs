//! Simulation and post-processing pipeline for a phase-randomness QRNG.
//!
//! The optical front-end (a gain-switched laser interfered with a CW laser on
//! a balanced detector) is modeled by [`optics`]; the rest of the crate is the
//! digital pipeline: ADC quantization and min-entropy estimation
//! ([`digitizer`]), XOR and Toeplitz randomness extraction ([`extractor`]) and
//! statistical validation ([`stats`]). [`pipeline`] ties the stages together
//! behind a reproducible configuration.

pub mod bits;
pub mod digitizer;
pub mod extractor;
pub mod optics;
pub mod pipeline;
pub mod stats;

mod error;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
