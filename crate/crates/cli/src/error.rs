use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// A core error raised while reading `path`.
    pub fn data_in(path: &Path, e: ringchain::Error) -> Self {
        match CliError::from(e) {
            CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
            CliError::Config(m) => CliError::Data(format!("{}: {m}", path.display())),
            other => other,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

impl From<ringchain::Error> for CliError {
    fn from(e: ringchain::Error) -> Self {
        use ringchain::Error as E;
        match e {
            E::InvalidArgument(_) | E::InconsistentQ(_) | E::LosslessDegenerate(_) | E::ModeMismatch => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}
