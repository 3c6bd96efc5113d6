use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("element {0} needs p or higher shells; supply integrals via FCIDUMP instead")]
    UnsupportedElement(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("SCF did not converge after {iterations} iterations (last energy {energy:.10})")]
    ScfNotConverged { iterations: usize, energy: f64 },

    #[error("invalid active window: {0}")]
    InvalidActiveWindow(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("duplicate integral entries disagree at ({p} {q} {r} {s}): {a} vs {b}")]
    SymmetryViolation {
        p: usize,
        q: usize,
        r: usize,
        s: usize,
        a: f64,
        b: f64,
    },

    #[error("operator is not anti-Hermitian (deviation {0:.3e})")]
    NotAntiHermitian(f64),

    #[error("dimension {0} exceeds the exact-diagonalization budget")]
    DimensionTooLarge(usize),

    #[error("operator pool is empty")]
    AdaptPoolEmpty,

    #[error("line search failed repeatedly; best energy {energy:.12}")]
    OptimizerStalled { energy: f64 },

    #[error("bond between atoms {0} and {1} has zero length")]
    DegenerateBond(usize, usize),

    #[error("missing subproblem energy for fragment set {0:?}")]
    MissingSubproblem(Vec<usize>),

    #[error("overlap matrix is ill-conditioned (smallest eigenvalue {0:.3e})")]
    IllConditionedOverlap(f64),

    #[error("DMET did not converge after {iterations} outer iterations (cost {cost:.3e})")]
    DmetNotConverged { iterations: usize, cost: f64 },

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Numerical(String),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
