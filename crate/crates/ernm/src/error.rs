use thiserror::Error;

/// Errors surfaced by network loading, model evaluation, sampling and fitting.
#[derive(Debug, Error)]
pub enum ErnmError {
    #[error("unknown node id `{0}` in edge list")]
    UnknownNodeId(String),

    #[error("duplicate node id `{0}` in node table")]
    DuplicateNodeId(String),

    #[error("self-loop on node `{0}` is not allowed")]
    SelfLoop(String),

    #[error("missing required column `{0}` in node table")]
    MissingColumn(String),

    #[error("non-binary value `{value}` in column `{column}` (row {row})")]
    NonBinaryValue {
        column: String,
        value: String,
        row: usize,
    },

    #[error("node index {index} out of range for network of {n} nodes")]
    NodeOutOfRange { index: usize, n: usize },

    #[error("model references attribute `{0}` not present on the network")]
    MissingAttribute(String),

    #[error("term `{term}` produced a non-finite statistic")]
    NonFiniteStatistic { term: String },

    #[error("vector length {got} does not match model term count {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid model specification: {0}")]
    InvalidModel(String),

    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),

    #[error("no stochastic component enabled: neither edges nor outcomes can toggle")]
    NothingToToggle,

    #[error("exact enumeration limited to n <= {max}, got n = {n}")]
    EnumerationTooLarge { n: usize, max: usize },

    #[error("parameter grid has {0} points, exceeding the 10^6 limit")]
    GridTooLarge(usize),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("matrix is singular after ridge jitter; degenerate directions: {0}")]
    SingularMatrix(String),

    #[error("every proposal was rejected during adaptation; lower `alpha` (current {alpha}) or lengthen the inner sampler")]
    AllRejected { alpha: f64 },

    #[error("convergence diagnostics need at least 2 chains, got {0}")]
    TooFewChains(usize),

    #[error("reference sample is degenerate (all values equal)")]
    DegenerateReference,

    #[error("chain is empty after burn-in")]
    EmptyChain,

    #[error("homophily variant `regularized` is not implemented; the published regularized form must be transcribed before it can be offered (use `match_count`)")]
    UnsupportedTerm,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ErnmError>;
