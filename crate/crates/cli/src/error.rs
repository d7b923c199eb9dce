use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Validation,
    Numerical,
}

/// A failure reported as one JSON line on stderr.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub field: String,
    pub message: String,
}

impl CliError {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Validation,
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn numerical(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Numerical,
            field: field.into(),
            message: message.into(),
        }
    }

    /// Wraps a core error raised while handling config section `section`.
    pub fn from_core(section: &str, e: quasidiff::Error) -> Self {
        let field = format!("{section}.{}", e.field());
        if e.is_numerical() {
            Self::numerical(field, e.to_string())
        } else {
            Self::validation(field, e.to_string())
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Validation => 2,
            ErrorKind::Numerical => 3,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&serde_json::json!({ "error": self })).expect("plain strings serialize")
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?} error in {}: {}", self.kind, self.field, self.message)
    }
}

impl std::error::Error for CliError {}
