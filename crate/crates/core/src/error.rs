use thiserror::Error;

/// Errors raised by the solvers, bound calculators and experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("singular least-squares system at column {column}{}", iteration.map(|k| format!(" (iteration {k})")).unwrap_or_default())]
    Singular {
        column: usize,
        iteration: Option<usize>,
    },

    #[error("enumeration budget exceeded: C({n},{k}) = {required} subsets, budget is {budget}")]
    BudgetExceeded {
        n: usize,
        k: usize,
        required: u128,
        budget: u128,
    },

    #[error("recovery condition not certifiable: measured delta = {delta} for order {order}")]
    NotCertified { order: usize, delta: f64 },

    #[error("outside formula domain: {0}")]
    Domain(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn at_iteration(self, k: usize) -> Self {
        match self {
            Error::Singular { column, .. } => Error::Singular {
                column,
                iteration: Some(k),
            },
            other => other,
        }
    }

    /// Short machine-readable tag, used in CLI error payloads.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "dimension",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InvalidConfig(_) => "invalid_config",
            Error::Singular { .. } => "singular",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::NotCertified { .. } => "not_certified",
            Error::Domain(_) => "domain",
            Error::NonFinite(_) => "non_finite",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}
