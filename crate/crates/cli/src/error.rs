use std::fmt;

use mt_core::campaign::CampaignError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INTERNAL: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_PROVENANCE: u8 = 3;
pub const EXIT_ENVIRONMENT: u8 = 4;

/// An error with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        CliError { code, error: error.into() }
    }

    pub fn invalid(error: impl Into<anyhow::Error>) -> Self {
        Self::new(EXIT_INVALID, error)
    }

    pub fn provenance(error: impl Into<anyhow::Error>) -> Self {
        Self::new(EXIT_PROVENANCE, error)
    }

    pub fn environment(error: impl Into<anyhow::Error>) -> Self {
        Self::new(EXIT_ENVIRONMENT, error)
    }

    pub fn internal(error: impl Into<anyhow::Error>) -> Self {
        Self::new(EXIT_INTERNAL, error)
    }

    pub fn context(self, msg: impl fmt::Display + Send + Sync + 'static) -> Self {
        CliError { code: self.code, error: self.error.context(msg) }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

/// Missing or unreadable inputs are invalid input; permission problems are
/// environmental; hash mismatches are provenance failures.
impl From<CampaignError> for CliError {
    fn from(e: CampaignError) -> Self {
        let code = match &e {
            CampaignError::Provenance { .. } => EXIT_PROVENANCE,
            CampaignError::Io { source, .. } if source.kind() == std::io::ErrorKind::PermissionDenied => {
                EXIT_ENVIRONMENT
            }
            _ => EXIT_INVALID,
        };
        CliError::new(code, e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
