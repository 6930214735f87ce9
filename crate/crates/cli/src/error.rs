use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("numerical failure: {0}")]
    Numeric(spde_lab::Error),

    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    /// 2 for configuration errors, 3 for numerical failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numeric(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<spde_lab::Error> for CliError {
    fn from(err: spde_lab::Error) -> Self {
        CliError::Numeric(err)
    }
}
