use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the model, approximation and simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation is not defined for the given model.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A lattice computation would exceed its configured cell budget.
    #[error("resource budget exceeded: need {required} cells, budget is {budget}")]
    Resource { required: u64, budget: u64 },

    /// The heavy-traffic and heavy-tail curves do not cross in the search window.
    #[error("no crossing of heavy-traffic and heavy-tail curves in [{lo}, {hi}]")]
    NoCrossing { lo: f64, hi: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn unsupported(msg: impl Into<String>) -> Error {
    Error::Unsupported(msg.into())
}
