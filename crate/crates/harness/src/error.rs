use getgrasp::geometry2d::GeometryError;
use getgrasp::mesh3d::MeshError;
use getgrasp::planner2d::Plan2DError;
use getgrasp::planner3d::Plan3DError;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read image {path}: {message}")]
    UnreadableImage { path: PathBuf, message: String },
    #[error("no valid depth under the mask")]
    NoValidDepth,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no feasible grasp: {0}")]
    NoFeasibleGrasp(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

impl HarnessError {
    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::NoFeasibleGrasp(_) => 3,
            Self::Io { .. } => 4,
            Self::Mesh(MeshError::Io(_)) => 4,
            _ => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }
}

impl From<Plan2DError> for HarnessError {
    fn from(e: Plan2DError) -> Self {
        match e {
            Plan2DError::NoFeasibleGrasp(_) => Self::NoFeasibleGrasp(e.to_string()),
            Plan2DError::Geometry(g) => Self::Geometry(g),
            Plan2DError::InvalidConfig(m) => Self::InvalidInput(m),
        }
    }
}

impl From<Plan3DError> for HarnessError {
    fn from(e: Plan3DError) -> Self {
        match e {
            Plan3DError::NoFeasibleGrasp(_) => Self::NoFeasibleGrasp(e.to_string()),
            Plan3DError::Mesh(m) => Self::Mesh(m),
            Plan3DError::InvalidConfig(m) => Self::InvalidInput(m),
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
