use thiserror::Error;

/// Errors raised by the numerical routines and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("truncation inadequate: {detail} (suggested n_max = {suggested_n_max})")]
    Truncation {
        detail: String,
        suggested_n_max: usize,
    },

    #[error("quadrature did not converge after {levels} refinement levels: {detail}")]
    ConvergenceFailure { levels: usize, detail: String },

    #[error("symbol is not in class S: {0}")]
    ClassS(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("near-dependent coherent system, residual norm below threshold at indices {indices:?}")]
    DegenerateBasis { indices: Vec<usize> },

    #[error("inadmissible semiclassical parameter: {detail} (minimal admissible eps = {min_eps:.6e})")]
    Inadmissible { detail: String, min_eps: f64 },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
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

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Wraps the error with the name of the module or stage that produced it.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True when the root cause is a configuration problem.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) => true,
            Error::Context { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub(crate) trait ResultExt<T> {
    fn context(self, context: &str) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn context(self, context: &str) -> Result<T> {
        self.map_err(|e| e.context(context))
    }
}
