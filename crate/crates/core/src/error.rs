use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid preorder outdegree code {code:?}: {reason}")]
    InvalidCode { code: Vec<usize>, reason: &'static str },

    #[error("cannot delete a leaf from the single-vertex tree")]
    SingleVertex,

    #[error("invalid model parameter: {0}")]
    InvalidModel(String),

    #[error("total weight of trees with {n} vertices is zero")]
    ZeroMass { n: usize },

    #[error("offspring law is not critical (mean {mean} != 1)")]
    NotCritical { mean: String },

    #[error("offspring weights sum to {total}, not 1")]
    NotNormalized { total: String },

    #[error("offspring law has infinite support; {0}")]
    InfiniteSupport(&'static str),

    #[error("variance metadata is not available for this model")]
    Sigma2Unavailable,

    #[error("gap has constant sign {sign} over the scanned interval")]
    ConstantSign { sign: &'static str },

    #[error("rejection sampler exhausted {attempts} attempts without hitting size {n}")]
    Exhausted { n: usize, attempts: u64 },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
