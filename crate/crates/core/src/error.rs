use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or inconsistent run directives.
    #[error("configuration error: {0}")]
    Config(String),

    /// Several configuration problems, each tagged with a JSON pointer.
    #[error("configuration error:{}", format_issues(.0))]
    Schema(Vec<SchemaIssue>),

    /// A Hilbert space that would not fit into the memory budget.
    #[error(
        "resource limit: dimension {dimension} needs ~{bytes} bytes, budget is {budget} bytes"
    )]
    Resource {
        dimension: u128,
        bytes: u128,
        budget: u128,
    },

    #[error("numerical degradation: {0}")]
    Numerical(String),

    /// Caller broke a shape or domain contract.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemaIssue {
    pub pointer: String,
    pub message: String,
}

impl SchemaIssue {
    pub fn new(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        SchemaIssue {
            pointer: pointer.into(),
            message: message.into(),
        }
    }
}

fn format_issues(issues: &[SchemaIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("\n  {}: {}", i.pointer, i.message))
        .collect()
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Schema(_) | Error::Json(_) => 2,
            Error::Resource { .. } => 3,
            Error::Numerical(_) => 4,
            Error::Contract(_) | Error::Io(_) => 1,
        }
    }
}
