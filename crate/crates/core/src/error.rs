use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Evaluation point too close to a pole of a Green's function.
    #[error("pole: {what} evaluated at z = {z} within {distance:.3e} of pole {pole}")]
    Pole {
        what: String,
        z: String,
        pole: String,
        distance: f64,
    },

    #[error("divergent Dyson series: |sigma| = {0} >= 1")]
    Divergence(f64),

    #[error("integration failed: {0}")]
    Integration(String),

    /// A quantity that must be real or Hermitian came out otherwise.
    #[error("internal consistency: {0}")]
    Consistency(String),

    #[error("invalid configuration:\n{}", .0.iter().map(|e| format!("  - {e}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<String>),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            e => e,
        }
    }

    /// True for errors caused by the input (bad arguments or configuration),
    /// as opposed to failures during computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self.root(),
            Error::InvalidArgument(_) | Error::Config(_)
        )
    }
}
