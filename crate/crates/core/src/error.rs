//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by simulation, log handling, training, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of its documented range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A feature vector had the wrong length for the scorer or click model.
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An operation that needs at least one candidate received none.
    #[error("candidate set is empty")]
    EmptyCandidates,

    /// A ranked list was empty where a reward had to be computed.
    #[error("ranking is empty")]
    EmptyRanking,

    /// Rank positions are 1-based; 0 is not a position.
    #[error("rank must be >= 1, got {0}")]
    InvalidRank(usize),

    /// A session log line failed to parse. Lines are 1-based.
    #[error("malformed log record at line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),

    /// The examination-curve fit had too little signal to run.
    #[error("propensity fit failed: {0}")]
    PropensityFit(String),

    /// Value-bucket fitting needs at least as many purchases as buckets.
    #[error("need at least {needed} purchases to fit value buckets, found {found}")]
    InsufficientPurchases { needed: usize, found: usize },

    /// Every context weight was zero, so normalization is undefined.
    #[error("all context weights are zero")]
    AllZeroWeights,

    /// A clicked item carried no logged rank, so its propensity is unknown.
    #[error("clicked item {item_id} has no logged rank")]
    MissingLoggedRank { item_id: u64 },

    /// A session record's clicks disagree with its ranking or candidates.
    #[error("malformed session {session_id}: {detail}")]
    MalformedSession { session_id: u64, detail: String },

    /// A dataset built under one reward spec was fed to a consumer
    /// expecting another.
    #[error("dataset was built for reward spec `{dataset}`, but `{requested}` was requested")]
    SpecMismatch { dataset: String, requested: String },

    /// Score standardization is undefined when a component scorer is
    /// constant over the calibration set.
    #[error("scores from the {component} scorer have zero variance over the calibration set")]
    DegenerateScores { component: &'static str },

    /// Training diverged.
    #[error("non-finite loss {loss} at epoch {epoch}")]
    NonFiniteLoss { epoch: usize, loss: f64 },

    /// An operation that needs data received an empty dataset.
    #[error("dataset contains no contexts")]
    EmptyDataset,
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
