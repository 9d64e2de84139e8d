use thiserror::Error;

use crate::balls::Ball;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid generator parameters: {0}")]
    InvalidGenerator(String),

    #[error("space too large: {points} points exceeds cap {cap}")]
    TooLarge { points: u128, cap: usize },

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("ball centered at {} with radius {} contains no points", .0.center, .0.radius)]
    EmptyBall(Ball),

    #[error("invalid dilation factor {0}")]
    InvalidDilation(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("average over a set of zero measure")]
    EmptyAverage,

    #[error("no ball produced a usable ratio (all {0} skipped)")]
    NoData(usize),

    #[error("invalid exponent {0}: {1}")]
    InvalidExponent(f64, String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("Calderón–Zygmund precondition violated: {0}")]
    CzPrecondition(String),

    #[error("Calderón–Zygmund property ({property}) failed: {detail}")]
    CzConstruction { property: String, detail: String },

    #[error("nested decomposition impossible: high-level ball {} r={} is not inside any 5-dilate of a low-level ball", .witness.center, .witness.radius)]
    Nesting { witness: Ball },

    #[error("degenerate weight: {0}")]
    DegenerateWeight(String),

    #[error("threshold violated: measured eps = {eps} but the estimate needs eps < {threshold}")]
    Threshold { eps: f64, threshold: f64 },

    #[error("hypothesis not satisfied: {detail}")]
    Hypothesis {
        detail: String,
        witness: Option<Ball>,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("strip alignment: {0}")]
    Alignment(String),
}
