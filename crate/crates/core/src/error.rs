use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or inputs: bad spec, ordering violation, wrong dimension.
    #[error("{0}")]
    Domain(String),

    /// A numerical guard tripped or a physical identity failed to hold.
    #[error("{0}")]
    Numerical(String),

    /// The steady state is not unique.
    #[error("degenerate steady state for {context}: second-smallest singular value {gap_proxy:e} below {threshold:e}")]
    DegenerateSteadyState {
        context: String,
        gap_proxy: f64,
        threshold: f64,
    },

    /// The weight reached the ends of its truncated ladder during a measurement.
    #[error("truncation contaminated: boundary population {population:e} exceeds {limit:e}; use a larger ladder or a shorter horizon")]
    TruncationContaminated { population: f64, limit: f64 },

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Whether this error reports a failed numerical check rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical(_) | Error::DegenerateSteadyState { .. } | Error::TruncationContaminated { .. }
        )
    }

    /// Short machine-readable category used on the diagnostic stream.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Numerical(_) => "numerical",
            Error::DegenerateSteadyState { .. } => "degenerate-steady-state",
            Error::TruncationContaminated { .. } => "truncation-contaminated",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
