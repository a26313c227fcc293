//! Output records, sweep runner and error mapping behind the `hardylab`
//! binary.

pub mod records;
pub mod sweep;

use std::path::PathBuf;

use hardylab_core::Error as CoreError;

/// Rounds to 12 significant digits so printed records are stable across
/// platforms and reparse to the same value.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV output: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Usage(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    /// 1 for bad input, 2 for numerical failure, 3 for a failed check.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(
                CoreError::NonConvergence { .. }
                | CoreError::OptimizerNonConvergence(_)
                | CoreError::BracketInvalid { .. }
                | CoreError::Structural(_),
            ) => 2,
            CliError::CheckFailed(_) => 3,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn read_file(path: &std::path::Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &std::path::Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
