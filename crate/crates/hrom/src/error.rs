use std::io;
use std::path::PathBuf;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(#[from] hrom_core::Error),
    #[error("stale or missing artifacts: {0}")]
    Stale(String),
    #[error("malformed artifact: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("{path}: {source}")]
    Path { path: PathBuf, source: io::Error },
}

impl CliError {
    /// Process exit status: 2 config, 3 solver, 4 stale artifacts, 1 other.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Stale(_) | CliError::Format(_) => 4,
            CliError::Io(_) | CliError::Path { .. } => 1,
        }
    }
}

pub(crate) trait PathContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> PathContext<T> for io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| CliError::Path {
            path: path.into(),
            source,
        })
    }
}
