use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const OUTPUT: i32 = 1;
    pub const INPUT: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const INCONCLUSIVE: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Ingest {
        path: PathBuf,
        message: String,
        row: Option<usize>,
        column: Option<String>,
    },

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Numerical(#[from] covci::Error),

    #[error("writing {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Ingest { .. } | CliError::Config(_) => exit::INPUT,
            CliError::Numerical(_) => exit::NUMERICAL,
            CliError::Output { .. } => exit::OUTPUT,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Ingest { .. } => "ingestion",
            CliError::Config(_) => "configuration",
            CliError::Numerical(_) => "numerical",
            CliError::Output { .. } => "output",
        }
    }

    /// The structured form printed on stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            message: String,
            exit_code: i32,
            #[serde(skip_serializing_if = "Option::is_none")]
            row: Option<usize>,
            #[serde(skip_serializing_if = "Option::is_none")]
            column: Option<&'a str>,
        }
        let (row, column) = match self {
            CliError::Ingest { row, column, .. } => (*row, column.as_deref()),
            _ => (None, None),
        };
        let body = Body {
            kind: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
            row,
            column,
        };
        serde_json::json!({ "error": body }).to_string()
    }
}

pub type CliResult<T> = Result<T, CliError>;
