use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("Newton iteration for Gauss-Legendre node {index} of order {order} did not converge")]
    QuadratureNodes { order: usize, index: usize },

    #[error("quadrature for {entry} did not stabilize; last two estimates {previous} and {last}")]
    QuadratureStall {
        entry: String,
        previous: String,
        last: String,
    },

    #[error("mismatched magnetic fields: {0} vs {1}")]
    FieldMismatch(String, String),

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    JacobiStall { sweeps: usize, residual: f64 },

    #[error("non-positive eigenvalue {value} at index {index} inside the rate window")]
    NonPositive { index: usize, value: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no eigenvalue bracket in [{lo}, {hi}]: {trace}")]
    Bracket { lo: f64, hi: f64, trace: String },

    #[error("outer truncation radius insufficient: {0}")]
    Truncation(String),

    #[error("entry ({row},{col}): {source}")]
    Entry {
        row: usize,
        col: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
