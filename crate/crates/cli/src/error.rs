use thiserror::Error;

/// Everything that makes a run exit with status 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("I/O error: {0}")]
    Io(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("order error: initial states are not ordered: {0}")]
    Order(String),
    #[error("{0}")]
    Usage(String),
    #[error("run failed: {0}")]
    Run(String),
}

impl CliError {
    pub const EXIT_CODE: i32 = 2;
}
