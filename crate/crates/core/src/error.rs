use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("negative rate for {name}: {rate}")]
    NegativeRate { name: String, rate: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("steady state is not unique ({zero_modes} zero modes); the Markov graph is probably disconnected")]
    DegenerateSteadyState { zero_modes: usize },

    #[error("eigensystem is near-defective (reconstruction residual {residual:.3e}); perturb the rates slightly")]
    NearDefective { residual: f64 },

    #[error("mode with eigenvalue {re:.6e}{im:+.6e}i does not decay")]
    NonDecayingMode { re: f64, im: f64 },

    #[error("invalid click record: {0}")]
    InvalidClickRecord(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("record holds {frames} frames but at least {required} are needed")]
    InsufficientFrames { frames: usize, required: usize },

    #[error("frequency index {index} outside the computed coefficient range 0..={max}")]
    IndexOverflow { index: i64, max: usize },

    #[error("order-{order} cumulant needs at least {order} samples, got {samples}")]
    NotEnoughSamples { samples: usize, order: usize },

    #[error("empty click record")]
    EmptyRecord,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format version mismatch: file has version {found}, this tool reads version {expected}")]
    FormatVersion { found: u32, expected: u32 },

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
