use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("node {node} does not exist in layer {layer}")]
    MissingNode { layer: usize, node: NodeId },
    #[error("self-loop on node {0} is not allowed")]
    SelfLoop(NodeId),
    #[error("node {child} in layer {layer} already has parent {parent}")]
    AlreadyParented {
        layer: usize,
        child: NodeId,
        parent: NodeId,
    },
    #[error("parent layer {upper} is not directly above child layer {lower}")]
    LayerMismatch { lower: usize, upper: usize },
    #[error("insufficient edge statistics in layer {layer}: {edges} edges, need {required}")]
    InsufficientStatistics {
        layer: usize,
        edges: usize,
        required: usize,
    },
    #[error("invalid learner configuration: {0}")]
    InvalidConfig(String),
    #[error("frame contains no points")]
    EmptyFrame,
    #[error("cannot add a layer: top layer holds {0} nodes, expected 2")]
    TopLayerNotSaturated(usize),
    #[error("flat learner requires a single-layer map, got {0} layers")]
    NotFlat(usize),
}
