use std::path::PathBuf;

use thiserror::Error;

use crate::graph::NodeId;

/// A failed precondition of a rewiring operation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PreconditionViolation {
    #[error("source {0} is not harmful")]
    SourceNotHarmful(NodeId),
    #[error("removed target {0} is not harmful")]
    TargetNotHarmful(NodeId),
    #[error("inserted target {0} is not neutral")]
    InsertedNotNeutral(NodeId),
    #[error("edge ({u}, {v}) is not in the graph")]
    MissingEdge { u: NodeId, v: NodeId },
    #[error("edge ({u}, {w}) already exists")]
    EdgeExists { u: NodeId, w: NodeId },
    #[error("rank {rank} of op disagrees with slot rank {actual}")]
    RankMismatch { rank: usize, actual: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("node {0} has fewer than d positive-relevance candidates")]
    NodeWithFewerThanDCandidates(NodeId),
    #[error("relevance score {score} for ({src}, {dst}) is outside [0, 1]")]
    InvalidScore { src: String, dst: String, score: f64 },
    #[error("self-relevance entry for node {0}")]
    SelfRelevance(String),
    #[error("duplicate relevance entry ({0}, {1})")]
    DuplicateRelevance(String, String),
    #[error("unknown node id {0:?}")]
    UnknownNode(String),
    #[error("duplicate node id {0:?}")]
    DuplicateNode(String),
    #[error("invalid label {0:?} (expected harmful or neutral)")]
    InvalidLabel(String),
    #[error("edge ({u}, {v}) not found")]
    EdgeNotFound { u: NodeId, v: NodeId },
    #[error("node {0} has zero ideal DCG")]
    ZeroIdealDcg(NodeId),
    #[error("rewiring precondition violated: {0}")]
    PreconditionViolated(#[from] PreconditionViolation),
    #[error("malformed graph: {0}")]
    InvalidGraph(String),
    #[error("invalid rank discount: {0}")]
    InvalidDiscount(String),
    #[error("{} harmful node(s) cannot reach any neutral node", .0.len())]
    UnreachableHarmfulComponent(Vec<NodeId>),
    #[error("fixed-point iteration did not converge within {max_iter} iterations")]
    NotConverged { max_iter: usize },
    #[error("fundamental-matrix column for node {node} unavailable: {source}")]
    ColumnUnavailable {
        node: NodeId,
        #[source]
        source: Box<Error>,
    },
    #[error("{harmful} harmful nodes exceed the dense-oracle guard of {guard}")]
    TooLargeForDenseOracle { harmful: usize, guard: usize },
    #[error("absorbing system is singular")]
    SingularSystem,
    #[error("node {0} has no feasible neutral target")]
    NoFeasibleTarget(NodeId),
    #[error("node {0} is not harmful")]
    NotHarmful(NodeId),
    #[error("empty node subset")]
    EmptySubset,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
