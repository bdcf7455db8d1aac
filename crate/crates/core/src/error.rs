use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("singular system at t = {t}: {msg}")]
    Singular { t: f64, msg: String },
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("unknown lemma id `{0}`")]
    UnknownLemma(String),
    #[error("bad file format: {0}")]
    Format(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
