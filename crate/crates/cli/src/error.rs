use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] sbmlab_core::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot read {}: {source}", path.display())]
    Input { path: PathBuf, source: std::io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Output { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use sbmlab_core::Error as E;
        match self {
            CliError::Core(E::BudgetExceeded { .. }) => 3,
            CliError::Core(E::Io(_)) | CliError::Input { .. } | CliError::Output { .. } => 1,
            CliError::Core(_) | CliError::Config(_) => 2,
        }
    }
}
