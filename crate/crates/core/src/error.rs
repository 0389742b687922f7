use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("needs interior stencil at node {0:?}")]
    NeedsInteriorStencil([usize; 3]),
    #[error("degenerate metric at node {0:?}")]
    DegenerateMetric([usize; 3]),
    #[error("graph map undefined: {0}")]
    GraphMapUndefined(String),
    #[error("region exceeds stored grid: {0}")]
    RegionExceedsGrid(String),
    #[error("step too coarse: {0}")]
    StepTooCoarse(String),
    #[error("not monotone: {0}")]
    NotMonotone(String),
    #[error("insufficient height range: need [{need_lo}, {need_hi}], have [{have_lo}, {have_hi}]")]
    HeightRange {
        need_lo: f64,
        need_hi: f64,
        have_lo: f64,
        have_hi: f64,
    },
    #[error("no convergence: {what} (best residual {residual:e})")]
    NoConvergence { what: String, residual: f64 },
    #[error("instability: {0}")]
    Unstable(String),
    #[error("denominator degenerate: {0}")]
    Degenerate(String),
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("refine sampling: {0}")]
    RefineSampling(String),
    #[error("tail bound violated: need clipping radius {required_radius}")]
    TailBound { required_radius: f64 },
    #[error("rank mismatch: {0}")]
    Rank(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
