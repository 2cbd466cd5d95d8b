use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A mathematical precondition failed (arccos argument, non-positive rate, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("link unusable: {bytes} bytes over a zero-rate link")]
    LinkUnusable { bytes: f64 },

    #[error("sub-task {index}: {reason}")]
    InvalidSubTask { index: usize, reason: String },

    #[error("action pair ({offload}, {cache}) is infeasible for sub-task {index}")]
    Infeasible {
        index: usize,
        offload: u8,
        cache: u8,
    },

    #[error("action matrix covers {got} sub-tasks, task has {expected}")]
    ActionLength { expected: usize, got: usize },

    #[error("search space of {size} actions exceeds the limit {limit}")]
    SearchLimit { size: u128, limit: u128 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("feature layout v{found} does not match encoder v{expected}")]
    LayoutMismatch { expected: u32, found: u32 },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("training diverged: {0}")]
    NonFinite(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable category, used for CLI exit reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::LinkUnusable { .. } => "link",
            Error::InvalidSubTask { .. } => "task",
            Error::Infeasible { .. } | Error::ActionLength { .. } => "infeasible",
            Error::SearchLimit { .. } => "search-limit",
            Error::Dimension { .. } => "dimension",
            Error::LayoutMismatch { .. } => "layout",
            Error::EmptyDataset => "dataset",
            Error::NonFinite(_) => "training",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
        }
    }
}
