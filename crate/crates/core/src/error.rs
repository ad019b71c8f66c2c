use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown irrep {0}")]
    UnknownIrrep(usize),
    #[error("group file error at line {line}: {msg}")]
    GroupFile { line: usize, msg: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical degeneracy: {0}")]
    Numerical(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::GroupFile { .. } | Error::UnknownIrrep(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
