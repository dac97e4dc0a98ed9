//! Incremental multi-layer topological mapping of 3D point-cloud streams.
//!
//! A [`MultiLayerMap`] stacks graphs of geometrically growing vigilance
//! radius. Layer 1 is learned directly from input points with an adaptive
//! resonance rule; every node created in a layer is fed to the layer above,
//! and parent/child links between layers let [`hierarchy::hierarchical_nns`]
//! narrow the winner search from a single root down to layer 1.
//! [`flat::FlatLearner`] is the exhaustive single-layer baseline.

pub mod audit;
pub mod complexity;
pub mod error;
pub mod flat;
pub mod geom;
pub mod graph;
pub mod hierarchy;
pub mod learner;
pub mod metrics;
pub mod stats;
pub mod streams;

pub use error::MapError;
pub use flat::{FlatLearner, InputPoint, StepKind, StepOutcome, WinnerPair};
pub use graph::{
    AgingScope, EdgeRecord, LayerGraph, LearnerConfig, MultiLayerMap, NodeId, NodeRecord,
};
pub use hierarchy::{MlatcLearner, WinnerSets};
pub use learner::Learner;
pub use metrics::FrameMetrics;
