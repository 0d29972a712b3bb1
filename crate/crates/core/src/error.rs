use thiserror::Error;

pub type Result<T, E = LandauError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LandauError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("query radius {radius} exceeds the grid half-width {half_width}")]
    DomainTruncation { radius: f64, half_width: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unstable step at dt = {dt:e}: {reason}")]
    UnstableStep { dt: f64, reason: String },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("history covers [{covered_start}, {covered_end}] but the cylinder needs [{needed_start}, {needed_end}]")]
    Coverage {
        covered_start: f64,
        covered_end: f64,
        needed_start: f64,
        needed_end: f64,
    },

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LandauError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        LandauError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
