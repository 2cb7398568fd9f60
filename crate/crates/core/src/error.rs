use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid probe statistics: {0}")]
    InvalidProbeStats(String),

    /// Gauss-Jordan elimination hit a pivot below the relative threshold.
    #[error("singular matrix: pivot {pivot:e} below threshold {threshold:e}")]
    SingularMatrix { pivot: f64, threshold: f64 },

    /// `|det M|` is below the guard, the four parameters are not identifiable.
    #[error("singular model: |det M| = {det:e} is below the guard {threshold:e}")]
    SingularModel { det: f64, threshold: f64 },

    #[error("degenerate covariance: var_y * var_z - c_yz^2 = {0:e} is not positive")]
    DegenerateCovariance(f64),

    #[error("every phase-grid point was excluded by the singularity guard")]
    EmptyGridAfterExclusion,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
