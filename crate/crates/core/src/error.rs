use thiserror::Error;

/// Errors reported by the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("polynomial degree {0} outside the supported range 1..=4")]
    UnsupportedDegree(usize),

    #[error("interface layout needs more than {cap} grid lines (target h = {target_h})")]
    ResolutionCap { cap: usize, target_h: f64 },

    #[error("segment {0} is not a union of mesh edges")]
    SegmentNotResolved(String),

    #[error("matrix is singular: pivot {pivot:e} at column {column}")]
    SingularMatrix { column: usize, pivot: f64 },

    #[error("local problem on subdomain {subdomain} is not well posed: {source}")]
    LocalProblemSingular {
        subdomain: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("matrix is not positive definite (failed at row {0})")]
    NotPositiveDefinite(usize),

    #[error("vector is not discrete Helmholtz-harmonic on subdomain {subdomain}: residual {residual:e}")]
    NotHarmonic { subdomain: usize, residual: f64 },

    #[error("invalid decomposition: {0}")]
    Decomposition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
