use std::fmt;

/// Failure classes with distinct process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, bad configuration or a runtime error (exit 1).
    Usage(anyhow::Error),
    /// No certificate, or one that certifies nothing (exit 2).
    Certification(String),
    /// At least one implemented statistical test failed (exit 3).
    TestSuite(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Certification(_) => 2,
            CliError::TestSuite(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(e) => write!(f, "{e:#}"),
            CliError::Certification(m) => write!(f, "certification failed: {m}"),
            CliError::TestSuite(m) => write!(f, "statistical tests failed: {m}"),
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Usage(e.into())
    }
}
