use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("region boundary {value} on axis {axis} does not fall on a grid line")]
    MisalignedRegion { axis: usize, value: f64 },
    #[error("grid of {cells} cells on axis {axis} is not divisible by block size {block}")]
    IndivisibleBlocks { axis: usize, cells: usize, block: usize },
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("insufficient samples: {have} < {need} required for the support confidence")]
    InsufficientSamples { have: usize, need: usize },
    #[error("uncertainty set is empty at state {state}, action {action}: {reason}")]
    InfeasibleGamma { state: usize, action: usize, reason: String },
    #[error("linear program is infeasible")]
    LpInfeasible,
    #[error("dfa state {state} has overlapping edges for label {label:?}")]
    NondeterministicEdge { state: usize, label: Vec<String> },
    #[error("dfa state {state} has no edge for label {label:?}")]
    IncompleteTransition { state: usize, label: Vec<String> },
    #[error("unknown atomic proposition `{0}`")]
    UnknownProposition(String),
    #[error("value iteration stopped after {iterations} sweeps with residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by the numerics rather than by the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::InfeasibleGamma { .. }
                | Error::LpInfeasible
                | Error::NoConvergence { .. }
                | Error::InsufficientSamples { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
