use thiserror::Error;

#[derive(Debug, Error)]
pub enum CtmError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("singular division: |s| = {value:.3e} at k = {k:.4}")]
    Singular { k: f64, value: f64 },
    #[error("threshold resonance detected (|W| = {0:.3e}); decay estimates need a non-resonant configuration")]
    Resonance(f64),
}

impl CtmError {
    pub fn is_config(&self) -> bool {
        matches!(self, CtmError::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, CtmError>;
