use thiserror::Error;

use crate::model::Micros;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported state dimension {0} (expected 8 or 10)")]
    InvalidDimension(usize),

    #[error("negative time step {0} s")]
    NegativeTimeStep(f64),

    #[error("out-of-order timestamp {t} us (last seen {last} us)")]
    OutOfOrder { t: Micros, last: Micros },

    #[error("chi buffer holds {have} of {need} entries")]
    BufferNotFull { have: usize, need: usize },

    #[error("innovation covariance is singular")]
    SingularInnovation,

    #[error("seed ({x}, {y}) lies outside the {width}x{height} sensor")]
    SeedOutOfBounds {
        x: f64,
        y: f64,
        width: f64,
        height: f64,
    },

    #[error("unknown track id {0}")]
    UnknownTrack(u32),

    #[error("coincident blobs: separation {0} px")]
    CoincidentBlobs(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: u64,
        msg: String,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
