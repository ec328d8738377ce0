//! Recovery of the switching rates by fitting model spectra to measured ones.
//!
//! The fit runs over `(ln γ_in, ln γ_out, ln β²)` with `γ_det` fixed and
//! `γ_ph` tied to the observed click rate, so every parameter point is a
//! physically consistent emitter.

mod fit;
mod objective;
pub mod simplex;

pub use fit::{
    fit, fit_subsets, gamma_ph_from_counts, subset_errors, subset_records, switching_sum_from_s2, FitConfig, FitDiagnostics,
    FitResult, RateEstimate, StartDiagnostics, SubsetFit,
};
pub use objective::{gamma_ph_from_rate, Objective, PENALTY};
