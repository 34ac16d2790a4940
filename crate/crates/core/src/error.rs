use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: n_cells = {0}, need at least 2")]
    InvalidMesh(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular matrix: zero pivot at row {0}")]
    SingularMatrix(usize),

    #[error("parameter mu = {0} outside the admissible domain [1, inf)")]
    OutOfDomain(f64),

    #[error("negative radicand {0:e} in square root")]
    NegativeRadicand(f64),

    #[error("parameter mu = {0} is already a snapshot parameter")]
    DuplicateParameter(f64),

    #[error("snapshot at mu = {mu} is numerically dependent on the basis (relative pivot {pivot:e})")]
    LinearDependence { mu: f64, pivot: f64 },

    #[error("reduced model is empty")]
    EmptyModel,

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("reduced matrix is singular or too ill-conditioned to solve at mu = {0}")]
    ReducedSingular(f64),

    #[error("interpolation matrix ill-conditioned (cond ~ {cond:e}) after {attempts} attempts; try oversampling")]
    IllConditioned { cond: f64, attempts: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("artifact error: {0}")]
    Artifact(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical pipeline, as opposed to bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularMatrix(_)
                | Error::NegativeRadicand(_)
                | Error::LinearDependence { .. }
                | Error::ReducedSingular(_)
                | Error::IllConditioned { .. }
        )
    }
}
