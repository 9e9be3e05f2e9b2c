use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("state is not of X form (largest off-X element {max_off_x:e})")]
    NotXForm { max_off_x: f64 },

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("generator has an eigenvalue with positive real part {0:e}")]
    UnstableGenerator(f64),

    #[error("no long-time limit: purely imaginary eigenvalue {0:e}i carries weight")]
    NoLimit(f64),

    #[error("spectral projection failed: {0}")]
    Projection(String),

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("linear solve failed: {0}")]
    Singular(&'static str),
}

impl Error {
    pub(crate) fn dims(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures that come from numerical validation rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::InvalidDensity(_)
                | Error::NotXForm { .. }
                | Error::UnstableGenerator(_)
                | Error::NoLimit(_)
                | Error::Projection(_)
                | Error::StepUnderflow { .. }
                | Error::Singular(_)
        )
    }
}
