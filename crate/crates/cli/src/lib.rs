//! Library side of the `spectrax` command: file schemas and subcommands.

pub mod commands;
pub mod files;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("bad input file: {0}")]
    Schema(String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Solver(#[from] spectrax::hierarchy::HierarchyError),
    #[error(transparent)]
    Problem(#[from] spectrax::problems::ProblemError),
    #[error(transparent)]
    Eig(#[from] spectrax::eig::EigError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success,
    /// Some level failed or did not converge; partial results were written.
    Partial,
}

impl Exit {
    pub fn code(self) -> i32 {
        match self {
            Exit::Success => 0,
            Exit::Partial => 2,
        }
    }

    fn from_failures(failed: bool) -> Self {
        if failed {
            Exit::Partial
        } else {
            Exit::Success
        }
    }
}
