use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("polygon is not convex")]
    NotConvex,

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("singular matrix: {0}")]
    Singular(&'static str),

    #[error("covariance is not yaw-aligned (z axis is not an eigenvector)")]
    NotYawAligned,

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite evaluation at component {component}")]
    NonFinite { component: usize },
}
