//! Polyspectra estimation from photon clicks and sampled traces.

pub mod clicks;
pub mod cumulants;
pub mod fourier;
pub mod spectra;
pub mod window;

pub use clicks::{segment, thin, ClickRecord, Frames};
pub use spectra::{
    estimate_sampled, estimate_spectra, ComplexSpectrum2, EstimationConfig, MarkWeights, ScalarEstimate, SpectraMetadata,
    SpectraSet, Spectrum1, Spectrum2,
};
pub use window::Window;
