use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Error)]
pub enum FsdError {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid dynamics: {0}")]
    InvalidDynamics(String),

    #[error("malformed configuration: node {node} has state {state} but q = {q}")]
    MalformedConfiguration { node: NodeId, state: u8, q: u8 },

    #[error("configuration length {got} does not match node count {expected}")]
    ConfigurationLength { got: usize, expected: usize },

    #[error("enumeration budget exceeded: q^n = {total} configurations, cap = {cap}")]
    BudgetExceeded { total: u128, cap: u128 },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("malformed instance: {0}")]
    MalformedInstance(String),

    #[error("malformed certificate: {0}")]
    MalformedCertificate(String),

    #[error("circuit construction bug: cycle detected")]
    CircuitCycle,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, FsdError>;
