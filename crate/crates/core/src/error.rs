use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} did not converge (final bracket width {bracket_width:e})")]
    Convergence { what: String, bracket_width: f64 },

    #[error("violated hypothesis `{hypothesis}`: {detail}")]
    Hypothesis { hypothesis: String, detail: String },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("CFL violation: dt = {dt:e} exceeds the admissible step, try dt <= {suggested:e}")]
    Cfl { dt: f64, suggested: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn hypothesis(hypothesis: &str, detail: impl Into<String>) -> Self {
        Error::Hypothesis {
            hypothesis: hypothesis.to_string(),
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
