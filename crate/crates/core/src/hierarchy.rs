//! Multi-layer learner: coarse-to-fine candidate search followed by
//! bottom-up learning that propagates new nodes into coarser layers.
//!
//! Each point is handled in two phases. The search phase walks from the single
//! root down to layer 1, keeping at every layer only the children of the
//! previous layer's candidates that lie within that layer's search radius
//! (the cumulative vigilance sum). The learning phase then runs the ordinary
//! update rule on layer 1 and, while it keeps creating nodes, on the layers
//! above it, linking every new node to its parent. When the top layer gains a
//! second node a new root layer is stacked on top.

use rand_chacha::ChaCha8Rng;

use crate::error::MapError;
use crate::flat::{
    exhaustive_winners, update_attribute_maps, update_by_winners, InputPoint, StepKind,
    StepOutcome, WinnerPair,
};
use crate::geom::{self, Vec3};
use crate::graph::{LearnerConfig, MultiLayerMap, NodeId};
use crate::learner::{self, Learner};
use crate::metrics::FrameMetrics;

/// Vigilance radius of layer `level` (1-based).
pub fn vigilance(level: usize, config: &LearnerConfig) -> f64 {
    config.vigilance(level)
}

/// Search radius of layer `level`: the sum of the vigilance radii of layers
/// `1..=level`. A layer-1 node within the base vigilance of a query can be at
/// most this far from its layer-`level` ancestor when nodes do not move.
pub fn search_threshold(level: usize, config: &LearnerConfig) -> f64 {
    assert!(level >= 1, "layers are numbered from 1");
    let mut sum = 0.0;
    for l in 1..=level {
        sum += vigilance(l, config);
    }
    sum
}

/// Per-layer search radii, indexed by 0-based layer position.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchThresholds {
    radii: Vec<f64>,
}

impl SearchThresholds {
    pub fn new(config: &LearnerConfig, layers: usize) -> Self {
        let mut t = SearchThresholds { radii: Vec::new() };
        t.extend_to(config, layers);
        t
    }

    pub fn extend_to(&mut self, config: &LearnerConfig, layers: usize) {
        while self.radii.len() < layers {
            let level = self.radii.len() + 1;
            let prev = self.radii.last().copied().unwrap_or(0.0);
            self.radii.push(prev + vigilance(level, config));
        }
    }

    /// Radius for layer `level` (1-based).
    pub fn get(&self, level: usize) -> f64 {
        self.radii[level - 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.radii
    }
}

/// Candidate winners per layer, each list ascending by distance (ties by id).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WinnerSets {
    /// `per_layer[i]` holds candidates of layer `i + 1`.
    pub per_layer: Vec<Vec<(NodeId, f64)>>,
    /// Distances computed per layer during the search.
    pub evals_per_layer: Vec<u64>,
    pub distance_evals: u64,
}

impl WinnerSets {
    /// Candidates of layer `level` (1-based).
    pub fn layer(&self, level: usize) -> &[(NodeId, f64)] {
        &self.per_layer[level - 1]
    }

    fn reset(&mut self, layers: usize) {
        self.per_layer.resize_with(layers, Vec::new);
        self.per_layer.truncate(layers);
        for w in &mut self.per_layer {
            w.clear();
        }
        self.evals_per_layer.clear();
        self.evals_per_layer.resize(layers, 0);
        self.distance_evals = 0;
    }
}

fn by_distance_then_id(a: &(NodeId, f64), b: &(NodeId, f64)) -> std::cmp::Ordering {
    a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))
}

/// Top-down candidate search for `p` over every layer of `map`.
pub fn hierarchical_nns(p: &Vec3, map: &MultiLayerMap) -> WinnerSets {
    let thresholds = SearchThresholds::new(map.config(), map.layer_count());
    let mut out = WinnerSets::default();
    search_into(p, map, &thresholds, &mut out);
    out
}

fn search_into(p: &Vec3, map: &MultiLayerMap, thresholds: &SearchThresholds, out: &mut WinnerSets) {
    let top = map.layer_count();
    out.reset(top);

    let top_layer = map.top();
    let root_set = &mut out.per_layer[top - 1];
    for node in top_layer.nodes() {
        root_set.push((node.id, geom::distance(p, &node.position)));
    }
    root_set.sort_unstable_by(by_distance_then_id);
    out.evals_per_layer[top - 1] = top_layer.len() as u64;

    for idx in (0..top - 1).rev() {
        let layer = map.layer(idx);
        let upper = map.layer(idx + 1);
        let radius = thresholds.get(idx + 1);
        let (lower_sets, upper_sets) = out.per_layer.split_at_mut(idx + 1);
        let candidates = &mut lower_sets[idx];
        let mut evals = 0u64;
        for &(w, _) in &upper_sets[0] {
            for &c in &upper.node(w).expect("winner exists").children {
                let d = geom::distance(p, &layer.node(c).expect("child exists").position);
                evals += 1;
                if d <= radius {
                    candidates.push((c, d));
                }
            }
        }
        candidates.sort_unstable_by(by_distance_then_id);
        out.evals_per_layer[idx] = evals;
    }
    out.distance_evals = out.evals_per_layer.iter().sum();
}

/// Hierarchical learner owning a [`MultiLayerMap`].
#[derive(Clone, Debug)]
pub struct MlatcLearner {
    map: MultiLayerMap,
    rng: ChaCha8Rng,
    thresholds: SearchThresholds,
    scratch: WinnerSets,
    distance_evals: u64,
}

impl MlatcLearner {
    pub fn new(config: LearnerConfig) -> Result<Self, MapError> {
        Self::from_map(MultiLayerMap::new(config)?)
    }

    pub fn from_map(map: MultiLayerMap) -> Result<Self, MapError> {
        let config = *map.config();
        Ok(MlatcLearner {
            thresholds: SearchThresholds::new(&config, map.layer_count()),
            rng: learner::seeded_rng(config.rng_seed),
            map,
            scratch: WinnerSets::default(),
            distance_evals: 0,
        })
    }

    pub fn map(&self) -> &MultiLayerMap {
        &self.map
    }

    #[cfg(test)]
    pub(crate) fn map_mut_for_tests(&mut self) -> &mut MultiLayerMap {
        &mut self.map
    }

    pub fn into_map(self) -> MultiLayerMap {
        self.map
    }

    pub fn thresholds(&self) -> &SearchThresholds {
        &self.thresholds
    }

    /// Winner sets computed for the most recent point.
    pub fn last_winner_sets(&self) -> &WinnerSets {
        &self.scratch
    }

    /// Learns from one point. Returns the outcome of every layer visited,
    /// starting with layer 1.
    pub fn train_point(&mut self, p: &InputPoint) -> Result<Vec<StepOutcome>, MapError> {
        let config = *self.map.config();
        search_into(&p.position, &self.map, &self.thresholds, &mut self.scratch);
        self.distance_evals += self.scratch.distance_evals;
        let searched_layers = self.scratch.per_layer.len();

        let mut steps = Vec::with_capacity(2);
        let mut created_below: Option<NodeId> = None;
        let mut idx = 0;
        while idx < self.map.layer_count() {
            let (winners, evals) = if idx < searched_layers {
                (
                    WinnerPair::from_sorted(&self.scratch.per_layer[idx]),
                    self.scratch.evals_per_layer[idx],
                )
            } else {
                // Layer stacked during this iteration: not covered by the search.
                let mut evals = 0;
                let w = exhaustive_winners(&p.position, self.map.layer(idx), &mut evals);
                self.distance_evals += evals;
                (w, evals)
            };
            let mut outcome = update_by_winners(p, self.map.layer_mut(idx), &winners, &config)?;
            outcome.distance_evals = evals;
            steps.push(outcome);

            match outcome.kind {
                StepKind::NewNode(id) => {
                    if let Some(child) = created_below {
                        self.map.set_parent(idx - 1, child, id)?;
                    }
                    created_below = Some(id);
                    if idx + 1 == self.map.layer_count() && self.map.layer(idx).len() == 2 {
                        self.add_layer(id)?;
                    }
                    idx += 1;
                }
                StepKind::Updated | StepKind::UpdatedWithEdge => {
                    if let Some(child) = created_below {
                        let s1 = winners.s1.expect("update implies a first winner");
                        self.map.set_parent(idx - 1, child, s1)?;
                    }
                    break;
                }
            }
        }

        let target = match steps[0].kind {
            StepKind::NewNode(id) => id,
            _ => steps[0].winners.s1.expect("update implies a first winner"),
        };
        update_attribute_maps(
            self.map.layer_mut(0),
            target,
            p,
            config.normal_edge_threshold,
        )?;
        Ok(steps)
    }

    /// Stacks a new root layer above a top layer that has just reached two
    /// nodes. The root copies the node that was already there, which becomes
    /// its first child; `just_created` is left for the ongoing ascent.
    pub fn add_layer(&mut self, just_created: NodeId) -> Result<(), MapError> {
        let top_idx = self.map.layer_count() - 1;
        let top = self.map.layer(top_idx);
        if top.len() != 2 {
            return Err(MapError::TopLayerNotSaturated(top.len()));
        }
        if !top.contains(just_created) {
            return Err(MapError::MissingNode {
                layer: top.level(),
                node: just_created,
            });
        }
        let existing = top
            .nodes()
            .iter()
            .find(|n| n.id != just_created)
            .expect("two nodes");
        let (existing_id, position) = (existing.id, existing.position);
        let root = self.map.push_layer().add_node(position);
        self.map.set_parent(top_idx, existing_id, root)?;
        self.thresholds
            .extend_to(self.map.config(), self.map.layer_count());
        Ok(())
    }

    pub fn train_frame(&mut self, frame: &[InputPoint]) -> Result<FrameMetrics, MapError> {
        learner::train_frame(self, frame)
    }
}

impl Learner for MlatcLearner {
    fn train_step(&mut self, p: &InputPoint) -> Result<StepOutcome, MapError> {
        Ok(self.train_point(p)?[0])
    }

    fn map(&self) -> &MultiLayerMap {
        &self.map
    }

    fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn distance_evals(&self) -> u64 {
        self.distance_evals
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit;

    fn cfg() -> LearnerConfig {
        LearnerConfig::default()
    }

    #[test]
    fn vigilance_examples() {
        let c = cfg();
        assert_eq!(vigilance(1, &c), 0.5);
        assert_eq!(vigilance(2, &c), 2.0);
        assert_eq!(vigilance(3, &c), 8.0);
    }

    #[test]
    fn search_threshold_examples() {
        let c = cfg();
        assert_eq!(search_threshold(1, &c), 0.5);
        assert_eq!(search_threshold(2, &c), 2.5);
        assert_eq!(search_threshold(3, &c), 10.5);
        let t = SearchThresholds::new(&c, 6);
        for l in 1..=6 {
            assert_eq!(t.get(l), search_threshold(l, &c));
        }
        assert!(t.as_slice().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn single_layer_search_lists_everything_sorted() {
        let mut m = MultiLayerMap::new(cfg()).unwrap();
        for x in [3.0, 1.0, 4.0, 1.5, 9.0] {
            m.layer_mut(0).add_node([x, 0.0, 0.0]);
        }
        let w = hierarchical_nns(&[0.0; 3], &m);
        let ds: Vec<f64> = w.layer(1).iter().map(|e| e.1).collect();
        assert_eq!(ds, vec![1.0, 1.5, 3.0, 4.0, 9.0]);
        assert_eq!(w.distance_evals, 5);
    }

    fn two_layer_map(child_xs: &[f64]) -> MultiLayerMap {
        let mut m = MultiLayerMap::new(cfg()).unwrap();
        let children: Vec<_> = child_xs
            .iter()
            .map(|&x| m.layer_mut(0).add_node([x, 0.0, 0.0]))
            .collect();
        let root = m.push_layer().add_node([0.0; 3]);
        for c in children {
            m.set_parent(0, c, root).unwrap();
        }
        m
    }

    #[test]
    fn children_filtered_by_search_radius() {
        let m = two_layer_map(&[0.4, 0.6]);
        let w = hierarchical_nns(&[0.0; 3], &m);
        assert_eq!(w.layer(1), &[(NodeId(0), 0.4)]);
        assert_eq!(w.evals_per_layer, vec![2, 1]);
    }

    #[test]
    fn all_children_beyond_radius_gives_empty_set() {
        let m = two_layer_map(&[0.7, 1.2]);
        let w = hierarchical_nns(&[0.0; 3], &m);
        assert!(w.layer(1).is_empty());
        assert_eq!(WinnerPair::from_sorted(w.layer(1)).d1, f64::INFINITY);
    }

    #[test]
    fn first_point_makes_single_node() {
        let mut l = MlatcLearner::new(cfg()).unwrap();
        let steps = l.train_point(&InputPoint::at([0.0; 3])).unwrap();
        assert_eq!(steps.len(), 1);
        assert_eq!(l.map().layer_count(), 1);
        assert_eq!(l.map().base().len(), 1);
        assert!(l.map().base().node(NodeId(0)).unwrap().parent.is_none());
    }

    #[test]
    fn distant_second_point_cascades_layers() {
        let mut l = MlatcLearner::new(cfg()).unwrap();
        l.train_point(&InputPoint::at([0.0; 3])).unwrap();
        let steps = l.train_point(&InputPoint::at([100.0, 0.0, 0.0])).unwrap();
        // vigilance(4) = 32 < 100 <= vigilance(5) = 128.
        assert_eq!(l.map().layer_count(), 5);
        assert_eq!(steps.len(), 5);
        assert!(steps[..4].iter().all(|s| s.kind.is_new_node()));
        assert_eq!(steps[4].kind, StepKind::Updated);
        assert_eq!(l.map().top().len(), 1);
        audit::check_map(l.map()).unwrap();
    }

    #[test]
    fn update_inside_vigilance_leaves_upper_layers_alone() {
        let mut l = MlatcLearner::new(cfg()).unwrap();
        l.train_point(&InputPoint::at([0.0; 3])).unwrap();
        l.train_point(&InputPoint::at([10.0, 0.0, 0.0])).unwrap();
        let before: Vec<_> = l.map().layers()[1..]
            .iter()
            .map(|g| g.nodes().to_vec())
            .collect();
        let steps = l.train_point(&InputPoint::at([0.2, 0.0, 0.0])).unwrap();
        assert_eq!(steps.len(), 1);
        let after: Vec<_> = l.map().layers()[1..]
            .iter()
            .map(|g| g.nodes().to_vec())
            .collect();
        assert_eq!(before, after);
    }

    #[test]
    fn add_layer_inherits_existing_node() {
        let mut l = MlatcLearner::new(cfg()).unwrap();
        let m = l.map_mut_for_tests();
        let n1 = m.layer_mut(0).add_node([1.0, 2.0, 0.0]);
        let n2 = m.layer_mut(0).add_node([9.0, 2.0, 0.0]);
        l.add_layer(n2).unwrap();
        let m = l.map();
        assert_eq!(m.layer_count(), 2);
        let root = &m.top().nodes()[0];
        assert_eq!(root.position, [1.0, 2.0, 0.0]);
        assert_eq!(root.win_count, 0);
        assert_eq!(root.children, vec![n1]);
        assert_eq!(m.base().node(n1).unwrap().parent, Some(root.id));
        assert_eq!(m.base().node(n2).unwrap().parent, None);
        assert_eq!(m.top().vigilance(), m.config().alpha * m.base().vigilance());
    }

    #[test]
    fn add_layer_requires_two_top_nodes() {
        let mut l = MlatcLearner::new(cfg()).unwrap();
        assert_eq!(
            l.add_layer(NodeId(0)),
            Err(MapError::TopLayerNotSaturated(0))
        );
    }

    #[test]
    fn one_iteration_frame_on_empty_map() {
        let mut l = MlatcLearner::new(LearnerConfig { lambda: 1, ..cfg() }).unwrap();
        let m = l.train_frame(&[InputPoint::at([1.0, 1.0, 0.0])]).unwrap();
        assert_eq!(m.nodes_per_layer, vec![1]);
        assert_eq!(m.layer_count, 1);
    }
}
