use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("image decode failed: {0}")]
    Decode(#[from] image::ImageError),
    #[error("invalid symbol class {0} (expected 1..=32)")]
    InvalidClass(u32),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("regex error: {0}")]
    Regex(#[from] regex::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("text stage failed: {0}")]
    Text(String),
    #[error("symbol stage failed: {0}")]
    Symbol(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
