use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("deformation parameter q = {0} is outside (0, 1]")]
    InvalidDeformation(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("q-exponential argument {x} is outside the convergence radius {radius}")]
    OutsideRadius { x: f64, radius: f64 },

    #[error("series did not converge after {terms} terms")]
    SeriesNotConverged { terms: usize },

    #[error("q-factorial overflowed at n = {0}")]
    Overflow(usize),

    #[error("coherent-state truncation at n_max = {n_max} leaves tail weight {tail:e} (limit {limit:e})")]
    Truncation { n_max: usize, tail: f64, limit: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("tridiagonal QL did not converge for block {block} after {iterations} iterations")]
    EigenNotConverged { block: usize, iterations: usize },

    #[error("matrix is not Hermitian: max deviation {0:e}")]
    NotHermitian(f64),

    #[error("real embedding eigenvalues failed to pair at index {index}: {lo} vs {hi}")]
    Pairing { index: usize, lo: f64, hi: f64 },

    #[error("density matrix has negative eigenvalue {0:e}")]
    NotPositive(f64),

    #[error("spectral cache has no block N = {0}")]
    MissingBlock(usize),

    #[error("at q = {q}: {source}")]
    AtDeformation {
        q: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Argument errors are the caller's fault; everything else is a numerical failure.
    pub fn is_invalid_argument(&self) -> bool {
        if let Error::AtDeformation { source, .. } = self {
            return source.is_invalid_argument();
        }
        matches!(
            self,
            Error::InvalidDeformation(_)
                | Error::InvalidParameter(_)
                | Error::OutsideRadius { .. }
                | Error::Dimension(_)
        )
    }
}
