use thiserror::Error;

use nsglb::BanditError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{failures} run(s) failed; first: run {run} (seed {seed}), policy {policy}: {message}")]
    RunFailed {
        failures: usize,
        run: usize,
        seed: u64,
        policy: String,
        message: String,
    },

    #[error("{0} coverage check(s) exceeded the allowed violation frequency")]
    CoverageFailed(usize),

    #[error(transparent)]
    Bandit(#[from] BanditError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 3,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
