use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("contract error: {0}")]
    Contract(String),
    #[error("gauge reference vanishes at {} nuclear grid point(s): {points:?}", points.len())]
    GaugeReference { points: Vec<Vec<usize>> },
    #[error("grid does not cover the support: {0}")]
    Extent(String),
    #[error("quadrature did not converge: last estimate {last:?}, previous {previous:?}")]
    NonConvergence {
        last: Vec<num_complex::Complex64>,
        previous: Vec<num_complex::Complex64>,
    },
    #[error("non-physical input: {0}")]
    Division(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
