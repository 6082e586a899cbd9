use thiserror::Error;

/// Errors produced by the detection pipeline and its supporting tools.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown wavelet `{0}` (supported: haar, db4, db6, db7, db8, sym5, bior3.9)")]
    UnknownWavelet(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("cascade for {wavelet} did not converge: {reason}")]
    NonConvergence { wavelet: String, reason: String },

    #[error("non-finite sample at index {0}")]
    NonFiniteSample(usize),

    #[error("sampling rate mismatch: filter designed for {filter} Hz, signal is {signal} Hz")]
    RateMismatch { filter: f64, signal: f64 },

    #[error("scale {scale} maps the centre frequency to {omega:.4} rad/sample, outside (0, pi)")]
    OutOfBand { scale: f64, omega: f64 },

    #[error("scale band [{low}, {high}] does not intersect the transform scales")]
    DisjointBand { low: f64, high: f64 },

    #[error("template ends at {end_ms:.1} ms but the trial lasts {duration_ms:.1} ms")]
    TemplateOverflow { end_ms: f64, duration_ms: f64 },

    #[error("invalid trial spec: {0}")]
    InvalidTrialSpec(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("corpus of {available} positive trials cannot supply {required} calibration trials plus an evaluation set")]
    CorpusTooSmall { available: usize, required: usize },

    #[error("{detections} detections but {truths} truth labels")]
    LengthMismatch { detections: usize, truths: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by user configuration rather than input data.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::UnknownWavelet(_)
                | Error::InvalidConfig { .. }
                | Error::InvalidArgument(_)
                | Error::InvalidTrialSpec(_)
                | Error::DisjointBand { .. }
                | Error::OutOfBand { .. }
        )
    }

    pub(crate) fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
