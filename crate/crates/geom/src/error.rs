use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("point behind camera (z <= near plane)")]
    BehindCamera,
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error("file format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GeomError>;
