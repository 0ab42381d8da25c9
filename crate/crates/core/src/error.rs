use thiserror::Error;

use crate::backends::RemoteError;
use crate::envi::EnviError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Envi(#[from] EnviError),

    #[error(transparent)]
    Remote(#[from] RemoteError),

    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("value {value} at index {index} outside [0, 1]")]
    OutOfUnitRange { index: usize, value: f64 },

    #[error("pixel ({row}, {col}) out of bounds for {height}x{width} image")]
    OutOfBounds {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },

    #[error("band index {index} out of range for cube with {bands} bands")]
    BandOutOfRange { index: usize, bands: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("zero-norm spectrum")]
    ZeroNorm,

    #[error("spectrum has zero variance")]
    ZeroVariance,

    #[error("spectrum too short for correlation (need at least 2 values, got {0})")]
    SpectrumTooShort(usize),

    #[error("click set is empty")]
    EmptyClicks,

    #[error("duplicate click at ({0}, {1})")]
    DuplicateClick(usize, usize),

    #[error("mask has no foreground pixels")]
    EmptyMask,

    #[error("foreground exhausted: every foreground pixel has already been clicked")]
    ForegroundExhausted,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("no evaluable (image, class) tasks: every class is ignored or absent")]
    NoTasks,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("backend failed at step {step}")]
    Backend {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("task (image {image}, class {class}) failed")]
    Task {
        image: String,
        class: u32,
        #[source]
        source: Box<Error>,
    },
}
