use thiserror::Error;

use crate::prox::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("regularizer family is invalid: {}", format_violations(.0))]
    InvalidFamily(Vec<Violation>),

    /// An injected prox perturbation is larger than the admissible bound.
    #[error("perturbation |alpha| = {alpha:e} at coordinate {index} exceeds admissible bound {bound:e}")]
    InadmissiblePerturbation { index: usize, alpha: f64, bound: f64 },

    #[error("numerical failure: {message} (residual {residual:e})")]
    Numerical { message: String, residual: f64 },

    #[error("prox certificate delta {delta:e} exceeds budget {budget:e} at iteration {iteration}")]
    BudgetExceeded { iteration: usize, delta: f64, budget: f64 },

    #[error("non-finite objective at iteration {0}")]
    NonFinite(usize),

    #[error("reference optimum {reference} exceeds observed minimum {observed}")]
    InconsistentReference { reference: f64, observed: f64 },

    #[error("invariant violated: {what} (lhs {lhs:e}, rhs {rhs:e})")]
    Invariant { what: String, lhs: f64, rhs: f64 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("TOML parse error: {0}")]
    TomlDe(#[from] toml::de::Error),

    #[error("TOML serialization error: {0}")]
    TomlSer(#[from] toml::ser::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for failures caused by bad input rather than by the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::DimensionMismatch { .. }
                | Error::InvalidFamily(_)
                | Error::InadmissiblePerturbation { .. }
                | Error::Io(_)
                | Error::Csv(_)
                | Error::TomlDe(_)
                | Error::TomlSer(_)
        )
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
