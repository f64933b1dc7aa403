use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error(
        "far-field gap at |x| = {radius}: far-field model only valid for |x| >= {valid_radius}"
    )]
    FarFieldGap { radius: f64, valid_radius: f64 },
    #[error("non-integrable far field: {0}")]
    NonIntegrable(String),
    #[error("shift leaves grid coverage: {0}")]
    Coverage(String),
    #[error("unknown expression `{0}`")]
    UnknownExpr(String),
    #[error("singular sample: {0}")]
    Singular(String),
    #[error("unresolved: {0}")]
    Unresolved(String),
    #[error("solver did not converge: {0}")]
    NotConverged(String),
    #[error("degenerate sample: {0}")]
    Degenerate(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
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

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wraps the error with the name of the pipeline stage that raised it.
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParams(msg.into())
}
