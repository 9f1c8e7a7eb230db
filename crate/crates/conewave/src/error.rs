//! Error types shared across the crate.

use thiserror::Error;

/// Index of a grid node, one entry per axis.
pub type NodeIndex = Vec<usize>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("representation mismatch: {0}")]
    RepMismatch(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("evaluator not finite at {count} grid node(s); first offenders: {first:?}")]
    SingularNodes { count: usize, first: Vec<NodeIndex> },

    #[error("symbol degenerates on the unmasked set (|A|(1+|ξ|)^-α = {min:.3e} at node {witness:?})")]
    Degenerate { min: f64, witness: NodeIndex },

    #[error("point outside the required tube domain: {0}")]
    Domain(String),

    #[error("integral fails the decay precondition: {0}")]
    Divergent(String),

    #[error("boundary system ill-conditioned (estimate {cond:.3e})")]
    IllConditioned { cond: f64 },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("serialization format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
