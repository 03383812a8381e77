use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("value {value} is outside the domain [{lower}, {upper}]")]
    Domain { value: f64, lower: f64, upper: f64 },

    #[error("degenerate profile: all {0} raw valuations are equal")]
    DegenerateProfile(usize),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("episode exhausted: battery is {battery} at round {round}")]
    EpisodeExhausted { battery: f64, round: u64 },

    #[error("training diverged at iteration {iteration}: loss = {loss}")]
    TrainingDiverged { iteration: usize, loss: f64 },

    #[error("malformed checkpoint: {0}")]
    MalformedCheckpoint(String),

    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("dimension mismatch: {what} is {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        found: usize,
        expected: usize,
    },

    #[error("image {path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether the failure stems from bad user input or configuration rather
    /// than something going wrong at run time.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::Domain { .. }
                | Error::DegenerateProfile(_)
                | Error::InvalidConfig(_)
                | Error::DimensionMismatch { .. }
                | Error::VersionMismatch { .. }
                | Error::MalformedCheckpoint(_)
        )
    }
}
