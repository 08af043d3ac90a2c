use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by problem construction, transforms, solves and oracles.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid input data; the message names the offending field.
    #[error("{0}")]
    Invalid(String),

    /// A density integrated to zero over the requested domain.
    #[error("degenerate density")]
    DegenerateDensity,

    /// A cost evaluation produced NaN or infinity.
    #[error("non-finite cost value at point {row}, site {col}")]
    NonFiniteCost { row: usize, col: usize },

    /// The cost kind cannot report gradients.
    #[error("twist check requires gradients")]
    GradientUnavailable,

    /// The internal 1D/KKT solve behind a conjugate evaluation failed.
    #[error("conjugate solve failed: {0}")]
    ConjugateSolveFailed(String),

    /// The solver only accepts convex fees.
    #[error("convex fee required; use oracle module")]
    NonconvexFee,

    /// Enumeration would exceed the configured work budget.
    #[error("enumeration budget exceeded: requires {required} work units, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
