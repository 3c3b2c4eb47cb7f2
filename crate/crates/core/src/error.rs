use thiserror::Error;

/// Errors produced by the load model, learners and experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("no link between BS {bs} and TP {tp}: channel gain is zero")]
    InvalidLink { bs: usize, tp: usize },

    #[error("feasibility indeterminate: conditional eigenvalue iteration did not converge after {iterations} iterations (last change {last_change:e})")]
    Indeterminate { iterations: usize, last_change: f64 },

    #[error("training samples {first} and {second} have identical rate vectors")]
    DuplicateAnchors { first: usize, second: usize },

    #[error("need at least {needed} training samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("rate range is almost entirely infeasible: accepted {accepted} of {draws} draws")]
    InfeasibleRange { accepted: usize, draws: usize },

    #[error("linear program solver failed: {0}")]
    Solver(String),

    #[error("correlation undefined: {0} sequence is constant")]
    UndefinedCorrelation(&'static str),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
