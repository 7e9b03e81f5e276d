use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CbwkError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CbwkError {
    /// A parameter or document violates a stated constraint.
    #[error("configuration error: {0}")]
    Config(String),

    /// Several configuration violations collected in one pass.
    #[error("configuration errors:\n  {}", .0.join("\n  "))]
    ConfigList(Vec<String>),

    #[error("shape mismatch in {what}: expected {expected}, found {found}")]
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("arm index {index} out of range for {arms} arms")]
    ArmIndex { index: usize, arms: usize },

    #[error("linear program is infeasible: {0}")]
    Infeasible(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CbwkError {
    pub fn config(msg: impl Into<String>) -> Self {
        CbwkError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CbwkError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user input rather than by a failed run.
    pub fn is_config(&self) -> bool {
        matches!(self, CbwkError::Config(_) | CbwkError::ConfigList(_))
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(CbwkError::Shape {
            what,
            expected,
            found,
        })
    }
}
