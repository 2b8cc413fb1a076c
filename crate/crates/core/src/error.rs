use thiserror::Error;

/// Errors produced anywhere in the library.
///
/// The CLI maps these onto process exit codes, so the variants are grouped by
/// what the caller can do about them rather than by module.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    /// Invalid parameters, inconsistent inputs or malformed files.
    #[error("configuration error: {0}")]
    Config(String),

    /// A function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A quadrature or series produced a non-finite value.
    #[error("numerical error on [{lo}, {hi}]: {reason}")]
    Numerical { lo: f64, hi: f64, reason: String },

    /// An iterative procedure stopped before reaching its tolerance.
    #[error("no convergence after {iterations} iterations (achieved {achieved:e}, wanted {target:e}): {context}")]
    Convergence {
        iterations: usize,
        achieved: f64,
        target: f64,
        context: String,
    },

    /// A least-squares fit failed or was degenerate.
    #[error("fit failure: {0}")]
    Fit(String),

    /// Requested a value outside the range covered by the data.
    #[error("range error: {0}")]
    Range(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CoreError {
    fn from(e: std::io::Error) -> Self {
        CoreError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CoreError {
    fn from(e: serde_json::Error) -> Self {
        CoreError::Config(format!("json: {e}"))
    }
}

impl From<csv::Error> for CoreError {
    fn from(e: csv::Error) -> Self {
        CoreError::Config(format!("csv: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
