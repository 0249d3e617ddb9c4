use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] guidewave::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed csv: {0}")]
    Csv(String),
    #[error("acceptance verdict failed: {0}")]
    Verdict(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Csv(_) => 2,
            // parameters rejected by the core are configuration errors
            Self::Numerical(
                guidewave::Error::InvalidParameter(_)
                | guidewave::Error::ModeOutOfRange { .. }
                | guidewave::Error::TransverseUnderResolved { .. }
                | guidewave::Error::Hypothesis(_)
                | guidewave::Error::ProjectionUndefined,
            ) => 2,
            Self::Numerical(_) | Self::Io(_) => 3,
            Self::Verdict(_) => 4,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Csv(e.to_string())
    }
}
