use std::fmt;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Where a malformed document went wrong: a JSON path or a CSV line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location(pub String);

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("invalid selection: {0}")]
    InvalidSelection(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: Location, message: String },

    #[error("domain error in {op}: {reason}")]
    Domain { op: &'static str, reason: String },

    #[error("tree has {leaves} leaves (cap {cap}); enumeration would visit {prunings} prunings")]
    CapExceeded {
        leaves: usize,
        cap: usize,
        prunings: u128,
    },

    #[error("campaign refused: {0}")]
    Refused(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: Location(location.into()),
            message: message.into(),
        }
    }

    pub(crate) fn domain(op: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            op,
            reason: reason.into(),
        }
    }
}
