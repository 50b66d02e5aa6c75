use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("point outside segment: {what} = {value} (allowed |.| <= {half_length})")]
    OutsideSegment {
        what: &'static str,
        value: f64,
        half_length: f64,
    },

    #[error("invalid integration interval [{a}, {b}]")]
    Interval { a: f64, b: f64 },

    #[error("quadrature needs {required} panels, cap is {cap}")]
    PanelCap { required: usize, cap: usize },

    #[error("zero separation between field and source points")]
    ZeroDistance,

    #[error("mode direction is parallel to the receive line (|gamma| = 1)")]
    ParallelDirection,

    #[error("noise covariance is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("singular value decomposition failed: {0}")]
    Svd(String),

    #[error("linear solve failed: {0}")]
    Singular(String),

    #[error("water-filling needs a positive power budget and at least one positive gain")]
    WaterFilling,

    #[error("combiner column {0} is zero")]
    ZeroCombiner(usize),

    #[error("channel file {path}: {reason}")]
    ChannelFile { path: PathBuf, reason: String },

    #[error("channel file header does not match the requested setup: {0}")]
    HeaderMismatch(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 invalid config, 2 numerical failure,
    /// 3 I/O failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Geometry(_)
            | Error::Config(_)
            | Error::OutsideSegment { .. }
            | Error::HeaderMismatch(_) => 1,
            Error::Interval { .. }
            | Error::PanelCap { .. }
            | Error::ZeroDistance
            | Error::ParallelDirection
            | Error::NotPositiveDefinite { .. }
            | Error::Svd(_)
            | Error::Singular(_)
            | Error::WaterFilling
            | Error::ZeroCombiner(_) => 2,
            Error::ChannelFile { .. } | Error::Io { .. } => 3,
        }
    }
}
