use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema parse error at line {line}, column {column}: {message}")]
    SchemaParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("graph load error at {file} line {line}: {message}")]
    GraphLoad {
        file: String,
        line: u64,
        message: String,
    },

    #[error("unknown vertex id {0}")]
    UnknownVertex(u64),

    #[error("syntax error at line {line}, column {column}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        line: usize,
        column: usize,
        expected: Vec<String>,
        found: String,
    },

    #[error("unknown type name `{0}`")]
    UnknownType(String),

    #[error("unknown alias `{0}`")]
    UnknownAlias(String),

    #[error("invalid pattern: {0}")]
    Pattern(String),

    #[error("invalid plan: {0}")]
    Plan(String),

    #[error("guard exceeded: {0}")]
    Guard(String),

    #[error("unbound parameter `${0}`")]
    UnboundParameter(String),

    #[error("type mismatch: {0}")]
    TypeMismatch(String),

    #[error("statistics error: {0}")]
    Statistics(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
