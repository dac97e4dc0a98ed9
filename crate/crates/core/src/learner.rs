//! Frame-level driver shared by the flat and hierarchical learners.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::MapError;
use crate::flat::{InputPoint, StepOutcome};
use crate::graph::MultiLayerMap;
use crate::metrics::FrameMetrics;

/// A streaming learner that consumes one sample at a time.
pub trait Learner {
    /// Learns from `p`; returns the layer-1 outcome.
    fn train_step(&mut self, p: &InputPoint) -> Result<StepOutcome, MapError>;
    fn map(&self) -> &MultiLayerMap;
    /// Sampling source for frame training.
    fn rng(&mut self) -> &mut ChaCha8Rng;
    /// Distance evaluations performed since construction.
    fn distance_evals(&self) -> u64;
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `count` indices drawn uniformly with replacement from `0..n`.
pub fn sample_indices(n: usize, count: usize, rng: &mut impl Rng) -> Result<Vec<usize>, MapError> {
    if n == 0 {
        return Err(MapError::EmptyFrame);
    }
    Ok((0..count).map(|_| rng.random_range(0..n)).collect())
}

/// Trains `learner` on `lambda` uniform draws from `frame`.
///
/// Draws are made before the clock starts, so the timed span covers only
/// search and map updates.
pub fn train_frame<L: Learner + ?Sized>(
    learner: &mut L,
    frame: &[InputPoint],
) -> Result<FrameMetrics, MapError> {
    let lambda = learner.map().config().lambda;
    let picks = sample_indices(frame.len(), lambda, learner.rng())?;
    let evals_before = learner.distance_evals();
    let start = Instant::now();
    for &i in &picks {
        learner.train_step(&frame[i])?;
    }
    let wall = start.elapsed();
    let map = learner.map();
    Ok(FrameMetrics {
        frame_index: 0,
        wall_time_ms: wall.as_secs_f64() * 1e3,
        distance_evals: learner.distance_evals() - evals_before,
        nodes_per_layer: map.nodes_per_layer(),
        edges_per_layer: map.edges_per_layer(),
        layer_count: map.layer_count(),
        oracle_mismatches: None,
    })
}
