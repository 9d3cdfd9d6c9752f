use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("occupancy grid has no occupied voxel")]
    EmptyOccupancy,
    #[error("occupancy grid has no unoccupied voxel")]
    FullOccupancy,
    #[error("grid dims {0:?} too small (every axis needs at least 3 voxels)")]
    GridTooSmall([usize; 3]),
    #[error("invalid grid spec: {0}")]
    InvalidGrid(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is singular (rank deficient without damping)")]
    SingularMatrix,
    #[error("rank-deficient Jacobian with zero damping")]
    SingularityEscalation,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("kinematic chain is not serial: {0}")]
    NonSerialChain(String),
    #[error("link `{0}` has no usable shape")]
    MissingShape(String),
    #[error("scene has no static object")]
    EmptyScene,
    #[error("stream exhausted at t = {0}")]
    StreamExhausted(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("planner endpoint in collision: {0}")]
    InvalidEndpoint(&'static str),
    #[error("planner timed out after {0:.3} s")]
    Timeout(f64),
    #[error("episode stalled after {0} iterations")]
    Stalled(usize),
    #[error("episode hit the iteration cap ({0})")]
    MaxIters(usize),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
