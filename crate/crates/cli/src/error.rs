use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Schema(String),
    #[error("{0}")]
    Io(String),
    #[error("orbit trace is empty")]
    EmptyTrace,
    #[error("output path is empty")]
    EmptyPath,
    #[error(transparent)]
    Core(#[from] lorentz_core::Error),
}

impl CliError {
    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}
