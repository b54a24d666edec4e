//! Experiment driver: configuration parsing, pipeline execution and CSV /
//! summary artifacts.

mod config;
mod run;

pub use config::{ExperimentConfig, Mode, SystemChoice, WeightChoice};
pub use run::{execute, render_csv, run_experiment, write_artifacts, CsvRow, RunOutput, CSV_HEADER};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("config key `{0}` given twice")]
    DuplicateKey(String),

    #[error("bad value `{value}` for `{key}`: {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },

    #[error("invalid config: {0}")]
    Invalid(String),

    #[error(transparent)]
    Library(#[from] sampling_recovery::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit code: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Library(_) | CliError::Io { .. } => 1,
            _ => 2,
        }
    }
}
