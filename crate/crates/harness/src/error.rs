use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] ptdilate_core::Error),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("fit did not converge: {0}")]
    Fit(String),
    #[error("synthesis failed at r={r}, t={t}: err_u = {err_u:e}")]
    SynthesisFailed { r: f64, t: f64, err_u: f64 },
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
