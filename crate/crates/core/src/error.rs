//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("lag {max_lag} must be smaller than the series length {len}")]
    LagTooLarge { max_lag: usize, len: usize },
    #[error("spectrum is not positive semidefinite (minimum {min:e})")]
    NotPsd { min: f64 },
    #[error("spectral shape puts no mass on any bin")]
    DegenerateShape,
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("weight matrix has zero spectral radius after repeated draws")]
    ZeroSpectralRadius,
    #[error("eigenvalue solver did not converge")]
    EigenFailure,
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("state diverged at step {step}")]
    Divergence { step: usize },
    #[error("state matrix is numerically zero")]
    DegenerateStates,
    #[error("memory function at delay {tau} has imaginary residue {imag:e}")]
    ImaginaryResidue { tau: usize, imag: f64 },
    #[error("Gram matrix is singular beyond truncation")]
    SingularGram,
    #[error("basis set is not orthonormal (deviation {max_dev:e})")]
    BasisNotOrthonormal { max_dev: f64 },
    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },
    #[error("channel {0:?} not found")]
    ChannelNotFound(String),
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },
    #[error("grid exhausted without convergence")]
    NotConverged,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("trial {trial}{}: {source}", tau.map(|t| format!(", delay {t}")).unwrap_or_default())]
    Trial {
        trial: usize,
        tau: Option<usize>,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by the user's input rather than the numerics.
    pub fn is_config(&self) -> bool {
        match self {
            Error::InvalidSpec(_)
            | Error::Parse { .. }
            | Error::ChannelNotFound(_)
            | Error::NonFiniteValue { .. }
            | Error::Config(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_)
            | Error::LagTooLarge { .. }
            | Error::LengthMismatch { .. } => true,
            Error::Trial { source, .. } => source.is_config(),
            _ => false,
        }
    }

    pub(crate) fn in_trial(self, trial: usize) -> Error {
        match self {
            Error::Trial { .. } => self,
            e => Error::Trial { trial, tau: None, source: Box::new(e) },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
