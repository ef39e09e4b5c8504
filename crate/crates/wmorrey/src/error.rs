use thiserror::Error;

/// Errors surfaced by lattice, norm, operator, and harness operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty region: ball does not intersect the grid")]
    EmptyRegion,

    #[error("weight singular on sample at x = {at:?}")]
    WeightSingular { at: [f64; 2] },

    #[error("invalid exponent p = {0}; need p >= 1")]
    InvalidExponent(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("norm overflow: no Luxemburg bracket after {0} doublings")]
    NormOverflow(usize),

    #[error("kernel inadmissible: {0}")]
    KernelInadmissible(String),

    #[error("cost guard exceeded: estimated {estimated} kernel evaluations (limit {limit})")]
    CostGuard { estimated: u128, limit: u128 },

    #[error("degenerate corpus: every member has zero right-hand side")]
    DegenerateCorpus,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
