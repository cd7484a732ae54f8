use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("cannot normalize a zero-length vector")]
    ZeroVector,
    #[error("matrix is not a proper rotation")]
    NotARotation,
}

#[derive(Debug, Error)]
pub enum CloudError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("vertex element has no nx/ny/nz properties")]
    MissingNormals,
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("point {index} has a zero-length or non-finite normal")]
    InvalidNormal { index: usize },
    #[error("point {index} has a non-finite position")]
    InvalidPosition { index: usize },
    #[error("triangle {triangle} references vertex {vertex}, mesh has {count} vertices")]
    IndexOutOfRange {
        triangle: usize,
        vertex: usize,
        count: usize,
    },
    #[error("mesh has zero total surface area")]
    DegenerateMesh,
    #[error("unsupported file format: {0}")]
    UnsupportedFormat(String),
}

impl CloudError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        CloudError::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CloudError::Io {
            path: path.into(),
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthesisError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("invalid gripper model: {0}")]
    InvalidGripper(String),
    #[error("pair count overflows for n = {0}")]
    Overflow(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClusterError {
    #[error("number of clusters must be at least 1")]
    InvalidK,
    #[error("no candidates to cluster")]
    EmptyInput,
}
