//! Higher-order spectra of blinking single-photon emitters.
//!
//! The crate estimates polyspectra of orders one to four directly from photon
//! click timestamps, evaluates the matching closed-form spectra of a Markov
//! model written as a Lindblad system, and fits one to the other to recover
//! the switching rates of the emitter.

pub mod analytic;
pub mod decomposition;
pub mod error;
pub mod estimator;
pub mod fitting;
pub mod grid;
pub mod io;
pub mod model;
pub mod params;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};
pub use params::EmitterParams;
