use std::fmt;

/// Failure classes, one per process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration (exit 1).
    Usage(String),
    /// Unreadable, malformed or inconsistent input (exit 2).
    Data(String),
    /// The request exceeds what the chosen method supports (exit 3).
    Capability(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Capability(_) => 3,
        }
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Capability(m) => write!(f, "capability error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<anyembed::Error> for CliError {
    fn from(e: anyembed::Error) -> Self {
        match e {
            anyembed::Error::Capability(m) => CliError::Capability(m),
            anyembed::Error::InvalidArgument(m) => CliError::Usage(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Attaches the offending path to I/O and parse failures.
pub(crate) trait WithPath<T> {
    fn at(self, path: &std::path::Path) -> Result<T, CliError>;
}

impl<T, E: Into<CliError>> WithPath<T> for Result<T, E> {
    fn at(self, path: &std::path::Path) -> Result<T, CliError> {
        self.map_err(|e| match e.into() {
            CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}
