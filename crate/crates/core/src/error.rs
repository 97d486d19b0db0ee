use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e}, last iterate {last:?})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
        last: Vec<f64>,
    },

    #[error(
        "particle weights collapsed at t={t} (min log-weight {min_log_weight}, max log-weight {max_log_weight}, ess trace {ess_trace:?})"
    )]
    WeightDegeneracy {
        t: usize,
        min_log_weight: f64,
        max_log_weight: f64,
        ess_trace: Vec<f64>,
    },

    #[error("AUC undefined: {0}")]
    UndefinedAuc(String),

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("EM iteration {iteration}: {source}")]
    Em {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("all candidate fits failed: {0:?}")]
    AllFailed(Vec<String>),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Coarse classification used by the CLI to choose an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) => ErrorClass::Usage,
            Error::Domain(_)
            | Error::Dimension(_)
            | Error::Degenerate(_)
            | Error::Parse { .. }
            | Error::UndefinedAuc(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_) => ErrorClass::Data,
            Error::Convergence { .. } | Error::WeightDegeneracy { .. } | Error::AllFailed(_) => {
                ErrorClass::Numerical
            }
            Error::Em { source, .. } => source.class(),
        }
    }

    /// Short machine-parsable tag.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Dimension(_) => "dimension",
            Error::Degenerate(_) => "degenerate",
            Error::Convergence { .. } => "convergence",
            Error::WeightDegeneracy { .. } => "weight-degeneracy",
            Error::UndefinedAuc(_) => "undefined-auc",
            Error::Parse { .. } => "parse",
            Error::Em { source, .. } => source.tag(),
            Error::AllFailed(_) => "all-failed",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        match self {
            e @ Error::Em { .. } => e,
            e => Error::Em {
                iteration,
                source: Box::new(e),
            },
        }
    }
}
