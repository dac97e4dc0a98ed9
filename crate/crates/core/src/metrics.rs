use serde::{Deserialize, Serialize};

/// Per-frame instrumentation. `wall_time_ms` covers only the training loop.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub frame_index: u64,
    pub wall_time_ms: f64,
    pub distance_evals: u64,
    pub nodes_per_layer: Vec<usize>,
    pub edges_per_layer: Vec<usize>,
    pub layer_count: usize,
    pub oracle_mismatches: Option<u64>,
}

impl FrameMetrics {
    /// Layer-1 node count N.
    pub fn base_nodes(&self) -> usize {
        self.nodes_per_layer.first().copied().unwrap_or(0)
    }

    pub fn total_nodes(&self) -> usize {
        self.nodes_per_layer.iter().sum()
    }
}
