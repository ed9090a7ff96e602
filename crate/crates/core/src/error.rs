use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Operands that must agree (jet centre, jet order, grid shape) do not.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("singular series: {0}")]
    Singular(String),

    #[error("capability exceeded: {0}")]
    Capability(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("solver diverged at step {step}: non-finite temperature")]
    Divergence { step: usize },

    #[error("degenerate fit: {0}")]
    FitDegenerate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Contract(_) => "contract",
            Error::Domain(_) => "domain",
            Error::Overflow(_) => "overflow",
            Error::Singular(_) => "singular",
            Error::Capability(_) => "capability",
            Error::Input(_) => "input",
            Error::Validation(_) => "validation",
            Error::Divergence { .. } => "divergence",
            Error::FitDegenerate(_) => "fit_degenerate",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
