use thiserror::Error;

/// Errors produced by complex construction, metric realization and the
/// spectral solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A simplex realized with the given edge lengths has (numerically)
    /// vanishing volume, or a Whitney mass matrix lost positive definiteness.
    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),

    /// The mass matrix of a pencil is not positive definite. For the bundle
    /// discretization this signals that the twisted Whitney map is not
    /// injective at this mesh size.
    #[error("mass matrix not positive definite: {0}")]
    MassDegenerate(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
