use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown profile `{0}`")]
    UnknownProfile(String),

    #[error("invalid parameter for `{profile}`: {msg}")]
    InvalidParameter { profile: String, msg: String },

    #[error("profile `{name}` is not admissible: {violations:?}")]
    NotAdmissible { name: String, violations: Vec<String> },

    #[error("frequency grid too short: {0}")]
    GridTooShort(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("profile evaluation failed at omega = {omega}: {msg}")]
    ProfileEval { omega: f64, msg: String },

    #[error("derivative order {order} exceeds the supported budget {max}")]
    DerivativeBudget { order: usize, max: usize },

    #[error("pole order mismatch: gamma0 = {gamma0} exceeds n0 + 1 = {limit}")]
    PoleOrder { gamma0: f64, limit: f64 },

    #[error("distributional kernel: alpha = {alpha} has no pointwise Green's function")]
    DistributionalKernel { alpha: f64 },

    #[error("quadrature did not converge (residual estimate {residual:e})")]
    Quadrature { residual: f64 },

    #[error("duplicate centers at indices {0} and {1}")]
    DuplicateCenters(usize, usize),

    #[error("point set is not unisolvent for polynomials of degree {n0} (rank {rank} < {dim})")]
    NotUnisolvent { n0: i32, rank: usize, dim: usize },

    #[error("too few points: M = {m} < dim P = {dim}")]
    TooFewPoints { m: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular linear system")]
    Singular,

    #[error("zero field: the L_q norm vanishes")]
    ZeroField,

    #[error("solver did not converge after {iters} iterations (gap estimate {gap:e})")]
    NotConverged { iters: usize, gap: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
