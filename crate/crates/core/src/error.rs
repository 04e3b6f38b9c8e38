use thiserror::Error;

/// Errors shared by all subsystems.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value at node {node}")]
    NonFinite { node: usize },

    #[error("grid too small: {nodes} nodes, need at least {min}")]
    GridTooSmall { nodes: usize, min: usize },

    #[error("time step {dt:e} exceeds the stability limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("flow aborted at t = {t}: {reason}")]
    Blowup { t: f64, reason: String },

    #[error("self-intersection between segments {first} and {second}")]
    SelfIntersection { first: usize, second: usize },

    #[error("normal-graph regime violated: {0}")]
    GraphRegime(String),

    #[error("surface window does not cover the truncation ball: {0}")]
    WindowTooSmall(String),

    #[error("no shooting bracket found: {0}")]
    NoBracket(String),

    #[error("solver did not converge: {0}")]
    NotConverged(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("stage `{stage}` failed: {source}")]
    Stage { stage: &'static str, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

/// Attach the name of the pipeline stage to an error.
pub trait StageContext<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| match e {
            Error::Stage { .. } => e,
            other => Error::Stage { stage, source: Box::new(other) },
        })
    }
}
