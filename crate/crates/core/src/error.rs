use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature did not converge for {what}: achieved error {achieved:.3e} (tolerance {tolerance:.3e})")]
    Quadrature {
        what: String,
        achieved: f64,
        tolerance: f64,
    },

    #[error("kernel truncation failed: tail bound {tail_bound:.3e} above tolerance {tolerance:.3e} at degree {degree}")]
    KernelTail {
        tail_bound: f64,
        tolerance: f64,
        degree: usize,
    },

    #[error("matrix entry ({n}, {k}) overflows: log-magnitude {log_magnitude:.3}")]
    EntryOverflow {
        n: usize,
        k: usize,
        log_magnitude: f64,
    },

    #[error("moment table belongs to weight {expected}, got {found}")]
    WeightMismatch { expected: String, found: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. } | Error::KernelTail { .. } | Error::EntryOverflow { .. }
        )
    }

    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. }
                | Error::ParameterOutOfRange(_)
                | Error::InvalidInput(_)
                | Error::WeightMismatch { .. }
        )
    }
}
