use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config {path}: {source}")]
    Config {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] porofem::Error),
}

impl CliError {
    /// 2 for bad input, 3 for failures while running.
    pub fn exit_code(&self) -> u8 {
        use porofem::Error as E;
        match self {
            CliError::Invalid(_) | CliError::Read { .. } | CliError::Config { .. } => 2,
            CliError::Write { .. } => 3,
            CliError::Core(e) => match e {
                E::InvalidArgument(_)
                | E::Parse { .. }
                | E::Topology(_)
                | E::DegenerateCell { .. } => 2,
                E::Io { .. } | E::Singular(_) | E::Step { .. } => 3,
            },
        }
    }
}

pub fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}
