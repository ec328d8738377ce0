use std::fmt;

use polyspectra::Error;

/// Process exit codes.
pub mod code {
    pub const IO: i32 = 1;
    pub const PARSE: i32 = 3;
    pub const CONFIG: i32 = 4;
    pub const INSUFFICIENT_FRAMES: i32 = 5;
    pub const FORMAT_VERSION: i32 = 6;
    pub const FIT_FAILED: i32 = 7;
    pub const OUTPUT_EXISTS: i32 = 8;
    pub const MODEL: i32 = 9;
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure { code: code::CONFIG, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Failure { code: code::IO, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let c = match &e {
            Error::Parse { .. } | Error::InvalidClickRecord(_) | Error::Json(_) => code::PARSE,
            Error::InvalidConfig(_)
            | Error::InvalidParameter(_)
            | Error::NegativeRate { .. }
            | Error::IndexOverflow { .. }
            | Error::DimensionMismatch { .. } => code::CONFIG,
            Error::InsufficientFrames { .. } | Error::NotEnoughSamples { .. } | Error::EmptyRecord => code::INSUFFICIENT_FRAMES,
            Error::FormatVersion { .. } => code::FORMAT_VERSION,
            Error::FitFailed(_) => code::FIT_FAILED,
            Error::Io(_) => code::IO,
            Error::InvalidDensityMatrix(_)
            | Error::DegenerateSteadyState { .. }
            | Error::NearDefective { .. }
            | Error::NonDecayingMode { .. } => code::MODEL,
        };
        Failure { code: c, message: e.to_string() }
    }
}
