use std::fmt;
use std::path::Path;

/// Failure category; each maps to a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments or configuration (exit 1).
    Usage,
    /// Input files that do not parse or violate model invariants (exit 2).
    Data,
    /// Failure while running (exit 3).
    Runtime,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::Data => 2,
            ErrorKind::Runtime => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Usage => "usage",
            ErrorKind::Data => "data",
            ErrorKind::Runtime => "runtime",
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{kind} error: {message}")]
pub struct Error {
    pub kind: ErrorKind,
    pub message: String,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self { kind, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Usage, message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Data, message)
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Runtime, message)
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    /// Prefix the message with where it happened.
    pub fn context(self, what: impl fmt::Display) -> Self {
        Self { kind: self.kind, message: format!("{what}: {}", self.message) }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "error": {
                "kind": self.kind.as_str(),
                "exit_code": self.exit_code(),
                "message": self.message,
            }
        })
    }

    pub(crate) fn read(path: &Path, e: impl fmt::Display) -> Self {
        Self::data(format!("{}: {e}", path.display()))
    }

    pub(crate) fn write(path: &Path, e: impl fmt::Display) -> Self {
        Self::runtime(format!("{}: {e}", path.display()))
    }
}

impl From<copeland_core::Error> for Error {
    fn from(e: copeland_core::Error) -> Self {
        use copeland_core::Error as E;
        let kind = match e {
            E::Dimension(_)
            | E::NotAProbability { .. }
            | E::Asymmetric { .. }
            | E::Diagonal { .. }
            | E::InvalidRecord(_) => ErrorKind::Data,
            E::InvalidParameter(_) | E::OutOfRange(_) | E::ZeroSeparation | E::TooLarge(_) => ErrorKind::Usage,
            E::Disconnected | E::NotConverged { .. } | E::NonFiniteLikelihood => ErrorKind::Runtime,
        };
        Self::new(kind, e.to_string())
    }
}
