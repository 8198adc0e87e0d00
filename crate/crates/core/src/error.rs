use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the requested function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series or continued fraction failed to converge within its term budget.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// Requested precision could not be reached even after widening the guard.
    #[error("precision shortfall: {0}")]
    Precision(String),

    /// The half-life is undefined where the density derivative vanishes.
    #[error("singular point: {0}")]
    Singular(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    /// The proportional-norm loss cannot be evaluated (zero prediction at a sample time).
    #[error("loss error: {0}")]
    Loss(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used by the CLI error document.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::NoConvergence(_) => "no_convergence",
            Error::Precision(_) => "precision",
            Error::Singular(_) => "singular",
            Error::NotFound(_) => "not_found",
            Error::Quadrature(_) => "quadrature",
            Error::Loss(_) => "loss",
            Error::Fit(_) => "fit",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
