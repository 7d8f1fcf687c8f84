use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BbnError {
    #[error("cycle detected through node `{0}`")]
    CycleDetected(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("state collision on node `{node}`: `{state}`")]
    StateCollision { node: String, state: String },
    #[error("node `{0}` needs at least two states")]
    TooFewStates(String),
    #[error("query node `{node}`: {reason}")]
    InvalidQueryNode { node: String, reason: String },
    #[error("node `{node}` has {rows} parent configurations (limit {limit})")]
    CptTooLarge { node: String, rows: usize, limit: usize },
    #[error("smoothing must be a positive finite number, got {0}")]
    InvalidSmoothing(f64),
    #[error("invalid evidence: {0}")]
    InvalidEvidence(String),
    #[error("unknown preference dimension `{node}={state}`")]
    UnknownPreferenceDimension { node: String, state: String },
    #[error("equivalent sample size must be finite and >= 0, got {0}")]
    InvalidSampleSize(f64),
    #[error("cpt table for `{node}` is malformed: {reason}")]
    MalformedCpt { node: String, reason: String },
    #[error("cpt import line {line}: {reason}")]
    CptImport { line: usize, reason: String },
}
