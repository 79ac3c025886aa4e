use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("index out of range in {op}: {detail}")]
    Index { op: &'static str, detail: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular matrix in {op}: {detail}")]
    Singular { op: &'static str, detail: String },

    #[error(
        "{op} did not converge after {evaluations} evaluations (estimated error {estimate:e})"
    )]
    NonConvergence {
        op: &'static str,
        evaluations: usize,
        estimate: f64,
    },

    #[error("only {qualifying} draws qualified (need at least {required})")]
    InsufficientSamples { qualifying: usize, required: usize },

    #[error("unknown sweep axis `{0}`")]
    UnknownAxis(String),

    #[error("trial {trial}: {source}")]
    Trial {
        trial: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    /// True for failures of the numerical pipeline (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Singular { .. } | Error::NonConvergence { .. } => true,
            Error::Trial { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
