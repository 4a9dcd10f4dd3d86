use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular constraint system: smallest singular value {smallest:.3e} vs largest {largest:.3e} (ratio {ratio:.3e})")]
    Singular {
        smallest: f64,
        largest: f64,
        ratio: f64,
    },

    #[error("infeasible: {constraint} (P_min = {p_min:.6e} mW, P_max = {p_max:.6e} mW)")]
    Infeasible {
        constraint: String,
        p_min: f64,
        p_max: f64,
    },

    #[error("fixed-point iteration diverged after {} iterations", trace.len())]
    Convergence { trace: Vec<[f64; 2]> },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
