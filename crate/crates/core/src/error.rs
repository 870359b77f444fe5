use std::path::PathBuf;

use num_bigint::BigUint;
use thiserror::Error;

use crate::problem::SatSet;

#[derive(Debug, Error)]
pub enum Error {
    #[error("format error at line {line}: {msg}")]
    Format { line: u64, msg: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("coverage lookup failed for group {0}")]
    Lookup(SatSet),

    #[error("group {0} is not a variable of the QUBO")]
    Mapping(SatSet),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("refusing to enumerate S({n}, {k}) = {count} partitions (limit {limit})")]
    GuardExceeded {
        n: usize,
        k: usize,
        count: BigUint,
        limit: u64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn format(line: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
