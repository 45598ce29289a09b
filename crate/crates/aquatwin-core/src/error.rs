use thiserror::Error;

/// Errors surfaced by scenario parsing and validation.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

/// Errors surfaced by the simulation and digital-twin layers.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("unknown node id {0}")]
    UnknownNode(u32),
    #[error("no route from node {src} to node {dst}")]
    NoRoute { src: u32, dst: u32 },
    #[error("artifact could not be delivered to node {node} after {attempts} attempts")]
    Undeliverable { node: u32, attempts: u32 },
    #[error("replica too stale to patch step {step} (gap {gap} exceeds bound {bound})")]
    ReplicaStale { step: usize, gap: usize, bound: usize },
    #[error("invalid model shape: {0}")]
    ModelShape(String),
    #[error("task is infeasible: {0}")]
    Infeasible(String),
    #[error("{0}")]
    Other(String),
}
