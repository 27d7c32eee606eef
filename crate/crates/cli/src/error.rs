use std::io;
use std::path::{Path, PathBuf};

use geograsp::mesh::MeshError;
use geograsp::reward::{RewardError, TraceError};
use geograsp::sdf::GridError;
use geograsp::superquadric::SqError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid invocation: {0}")]
    Invocation(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Mesh { path: PathBuf, source: MeshError },
    #[error("grid: {0}")]
    Grid(#[from] GridError),
    #[error("superquadric fit: {0}")]
    Fit(#[from] SqError),
    #[error("reward configuration: {0}")]
    Reward(#[from] RewardError),
    #[error("trace: {0}")]
    Trace(#[from] TraceError),
    #[error("cache check: {0}")]
    Integrity(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Invocation(_) => 2,
            _ => 1,
        }
    }

    pub fn io(path: &Path) -> impl FnOnce(io::Error) -> Self + '_ {
        move |source| Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
