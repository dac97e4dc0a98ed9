//! Single-layer learner: exhaustive winner search plus the ART update rules.
//!
//! The update step is shared with the hierarchical learner, which calls
//! [`update_by_winners`] once per layer it ascends through.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::MapError;
use crate::geom::{self, Vec3};
use crate::graph::{LayerGraph, LearnerConfig, MultiLayerMap, NodeId};
use crate::learner::{self, Learner};
use crate::metrics::FrameMetrics;

/// One training sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputPoint {
    pub position: Vec3,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal: Option<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traversability: Option<bool>,
}

impl InputPoint {
    /// A point without attributes.
    pub fn at(position: Vec3) -> Self {
        InputPoint {
            position,
            normal: None,
            traversability: None,
        }
    }
}

/// First and second winners with their distances. Missing winners carry an
/// infinite distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WinnerPair {
    pub s1: Option<NodeId>,
    pub d1: f64,
    pub s2: Option<NodeId>,
    pub d2: f64,
}

impl WinnerPair {
    pub const NONE: WinnerPair = WinnerPair {
        s1: None,
        d1: f64::INFINITY,
        s2: None,
        d2: f64::INFINITY,
    };

    /// Takes the first two entries of an ascending candidate list.
    pub fn from_sorted(candidates: &[(NodeId, f64)]) -> Self {
        let mut w = WinnerPair::NONE;
        if let Some(&(id, d)) = candidates.first() {
            w.s1 = Some(id);
            w.d1 = d;
        }
        if let Some(&(id, d)) = candidates.get(1) {
            w.s2 = Some(id);
            w.d2 = d;
        }
        w
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    NewNode(NodeId),
    Updated,
    UpdatedWithEdge,
}

impl StepKind {
    pub fn is_new_node(&self) -> bool {
        matches!(self, StepKind::NewNode(_))
    }
}

/// Result of one learning step on one layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub kind: StepKind,
    /// Winners the step decided on.
    pub winners: WinnerPair,
    /// Distance evaluations spent selecting those winners.
    pub distance_evals: u64,
    /// Edges pruned by the aging rule.
    pub edges_removed: usize,
}

/// Nearest and second-nearest node over the whole layer. Ties go to the
/// smaller id. Adds the node count to `evals`.
pub fn exhaustive_winners(p: &Vec3, layer: &LayerGraph, evals: &mut u64) -> WinnerPair {
    let mut w = WinnerPair::NONE;
    for node in layer.nodes() {
        let d = geom::distance(p, &node.position);
        if d < w.d1 {
            w.s2 = w.s1;
            w.d2 = w.d1;
            w.s1 = Some(node.id);
            w.d1 = d;
        } else if d < w.d2 {
            w.s2 = Some(node.id);
            w.d2 = d;
        }
    }
    *evals += layer.len() as u64;
    w
}

/// Applies the vigilance test to `winners` and mutates `layer` accordingly.
///
/// * `d1 > vigilance`: a node is added at `p`.
/// * otherwise the first winner's count is incremented and it moves toward
///   `p` at rate `1/(10 m)`; if also `d2 <= vigilance` the two winners are
///   connected (age reset). Neighbours move at rate `1/(100 m_k)`, incident
///   edges age, and edges over the maintained threshold are pruned before the
///   threshold is refreshed.
///
/// With `updates_enabled == false` no node is ever moved.
pub fn update_by_winners(
    p: &InputPoint,
    layer: &mut LayerGraph,
    winners: &WinnerPair,
    config: &LearnerConfig,
) -> Result<StepOutcome, MapError> {
    let vigilance = layer.vigilance();
    let mut outcome = StepOutcome {
        kind: StepKind::Updated,
        winners: *winners,
        distance_evals: 0,
        edges_removed: 0,
    };

    let s1 = match winners.s1 {
        Some(s1) if winners.d1 <= vigilance => s1,
        _ => {
            outcome.kind = StepKind::NewNode(layer.add_node(p.position));
            return Ok(outcome);
        }
    };
    for id in [Some(s1), winners.s2].into_iter().flatten() {
        if !layer.contains(id) {
            return Err(MapError::MissingNode {
                layer: layer.level(),
                node: id,
            });
        }
    }

    let winner = layer.node_mut(s1);
    winner.win_count += 1;
    if config.updates_enabled {
        let rate = 1.0 / (10.0 * winner.win_count as f64);
        geom::step_toward(&mut winner.position, &p.position, rate);
    }

    if let Some(s2) = winners.s2 {
        if winners.d2 <= vigilance {
            layer.connect(s1, s2)?;
            outcome.kind = StepKind::UpdatedWithEdge;
        }
    }

    if config.updates_enabled {
        layer.pull_neighbors(s1, &p.position);
    }
    layer.age_incident_edges(s1)?;
    outcome.edges_removed = layer.remove_aged_edges(s1);
    layer.refresh_g_max();
    Ok(outcome)
}

/// Maintains the normal and traversability graphs around `target` on layer 1.
///
/// The node's normal is blended toward the input normal at the winner rate
/// and renormalised (adopted outright when the node has none); a label is
/// adopted from the input. Each incident edge then joins the normal graph
/// when the endpoint normals agree to within `normal_threshold` (dot
/// product), and the traversability graph when both labels exist and match.
pub fn update_attribute_maps(
    layer1: &mut LayerGraph,
    target: NodeId,
    p: &InputPoint,
    normal_threshold: f64,
) -> Result<(), MapError> {
    if !layer1.contains(target) {
        return Err(MapError::MissingNode {
            layer: layer1.level(),
            node: target,
        });
    }
    if p.normal.is_none() && p.traversability.is_none() {
        return Ok(());
    }
    let node = layer1.node_mut(target);
    if let Some(pn) = p.normal {
        node.normal = match node.normal {
            None => Some(pn),
            Some(mut n) => {
                let rate = 1.0 / (10.0 * node.win_count.max(1) as f64);
                geom::step_toward(&mut n, &pn, rate);
                // Antiparallel blends can cancel; keep the input direction then.
                Some(geom::normalized(&n).unwrap_or(pn))
            }
        };
    }
    if let Some(label) = p.traversability {
        node.traversability = Some(label);
    }

    let own_normal = layer1.node(target).and_then(|n| n.normal);
    let own_label = layer1.node(target).and_then(|n| n.traversability);
    let neighbours: Vec<NodeId> = layer1.neighbors(target).collect();
    for k in neighbours {
        let other = layer1.node(k).expect("neighbour exists");
        let in_nor = match (own_normal, other.normal) {
            (Some(a), Some(b)) => geom::dot(&a, &b) >= normal_threshold,
            _ => false,
        };
        let in_tra = matches!((own_label, other.traversability), (Some(a), Some(b)) if a == b);
        let e = layer1.edge_mut(target, k).expect("incident edge");
        e.in_nor = in_nor;
        e.in_tra = in_tra;
    }
    Ok(())
}

/// The non-hierarchical baseline learner over a single-layer map.
#[derive(Clone, Debug)]
pub struct FlatLearner {
    map: MultiLayerMap,
    rng: ChaCha8Rng,
    distance_evals: u64,
}

impl FlatLearner {
    pub fn new(config: LearnerConfig) -> Result<Self, MapError> {
        let rng = learner::seeded_rng(config.rng_seed);
        Ok(FlatLearner {
            map: MultiLayerMap::new(config)?,
            rng,
            distance_evals: 0,
        })
    }

    /// Wraps an existing map, which must have exactly one layer.
    pub fn from_map(map: MultiLayerMap) -> Result<Self, MapError> {
        if map.layer_count() != 1 {
            return Err(MapError::NotFlat(map.layer_count()));
        }
        let rng = learner::seeded_rng(map.config().rng_seed);
        Ok(FlatLearner {
            map,
            rng,
            distance_evals: 0,
        })
    }

    pub fn map(&self) -> &MultiLayerMap {
        &self.map
    }

    pub fn into_map(self) -> MultiLayerMap {
        self.map
    }

    /// Runs one exhaustive-search learning step on `p`.
    pub fn train_point(&mut self, p: &InputPoint) -> Result<StepOutcome, MapError> {
        let mut evals = 0;
        let winners = exhaustive_winners(&p.position, self.map.base(), &mut evals);
        self.distance_evals += evals;
        let config = *self.map.config();
        let layer = self.map.layer_mut(0);
        let mut outcome = update_by_winners(p, layer, &winners, &config)?;
        outcome.distance_evals = evals;
        let target = match outcome.kind {
            StepKind::NewNode(id) => id,
            _ => winners.s1.expect("update implies a first winner"),
        };
        update_attribute_maps(layer, target, p, config.normal_edge_threshold)?;
        Ok(outcome)
    }

    /// Trains on `lambda` points drawn uniformly with replacement from `frame`.
    pub fn train_frame(&mut self, frame: &[InputPoint]) -> Result<FrameMetrics, MapError> {
        learner::train_frame(self, frame)
    }
}

impl Learner for FlatLearner {
    fn train_step(&mut self, p: &InputPoint) -> Result<StepOutcome, MapError> {
        self.train_point(p)
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
    use crate::graph::AgingScope;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn layer(vig: f64) -> LayerGraph {
        LayerGraph::new(1, vig, 4, AgingScope::Incident)
    }

    fn brute_force(p: &Vec3, layer: &LayerGraph) -> WinnerPair {
        // Independent double loop: pick the minimum, then the minimum of the rest.
        let mut best: Option<(f64, NodeId)> = None;
        for n in layer.nodes() {
            let d = geom::distance(p, &n.position);
            if best.is_none_or(|(bd, bid)| (d, n.id) < (bd, bid)) {
                best = Some((d, n.id));
            }
        }
        let mut second: Option<(f64, NodeId)> = None;
        for n in layer.nodes() {
            if Some(n.id) == best.map(|b| b.1) {
                continue;
            }
            let d = geom::distance(p, &n.position);
            if second.is_none_or(|(bd, bid)| (d, n.id) < (bd, bid)) {
                second = Some((d, n.id));
            }
        }
        WinnerPair {
            s1: best.map(|b| b.1),
            d1: best.map_or(f64::INFINITY, |b| b.0),
            s2: second.map(|b| b.1),
            d2: second.map_or(f64::INFINITY, |b| b.0),
        }
    }

    #[test]
    fn winners_on_empty_layer() {
        let mut evals = 0;
        let w = exhaustive_winners(&[1.0, 0.0, 0.0], &layer(0.5), &mut evals);
        assert_eq!(w, WinnerPair::NONE);
        assert_eq!(evals, 0);
    }

    #[test]
    fn winners_single_and_pair() {
        let mut l = layer(0.5);
        let a = l.add_node([0.0; 3]);
        let mut evals = 0;
        let w = exhaustive_winners(&[1.0, 0.0, 0.0], &l, &mut evals);
        assert_eq!(
            (w.s1, w.d1, w.s2, w.d2),
            (Some(a), 1.0, None, f64::INFINITY)
        );
        l.add_node([3.0, 0.0, 0.0]);
        let w = exhaustive_winners(&[1.0, 0.0, 0.0], &l, &mut evals);
        assert_eq!((w.d1, w.d2), (1.0, 2.0));
        assert_eq!(evals, 3);
    }

    #[test]
    fn ties_go_to_smaller_id() {
        let mut l = layer(0.5);
        l.add_node([1.0, 0.0, 0.0]);
        l.add_node([-1.0, 0.0, 0.0]);
        l.add_node([0.0, 1.0, 0.0]);
        let w = exhaustive_winners(&[0.0; 3], &l, &mut 0);
        assert_eq!((w.s1, w.s2), (Some(NodeId(0)), Some(NodeId(1))));
    }

    #[test]
    fn winners_match_brute_force_on_random_layers() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let mut l = layer(0.5);
            let n = rng.random_range(0..12);
            for _ in 0..n {
                // Coarse grid so that ties actually happen.
                let p = [
                    rng.random_range(0..4) as f64,
                    rng.random_range(0..4) as f64,
                    0.0,
                ];
                l.add_node(p);
            }
            let q = [
                rng.random_range(0..4) as f64 + 0.5,
                rng.random_range(0..4) as f64,
                0.0,
            ];
            assert_eq!(exhaustive_winners(&q, &l, &mut 0), brute_force(&q, &l));
        }
    }

    fn cfg() -> LearnerConfig {
        LearnerConfig::default()
    }

    #[test]
    fn far_input_adds_node() {
        let mut l = layer(0.5);
        l.add_node([0.0; 3]);
        let p = InputPoint::at([0.7, 0.0, 0.0]);
        let w = exhaustive_winners(&p.position, &l, &mut 0);
        let out = update_by_winners(&p, &mut l, &w, &cfg()).unwrap();
        assert_eq!(out.kind, StepKind::NewNode(NodeId(1)));
        assert_eq!(l.node(NodeId(1)).unwrap().position, [0.7, 0.0, 0.0]);
    }

    #[test]
    fn winner_moves_a_tenth_on_first_win() {
        let mut l = layer(2.0);
        let a = l.add_node([0.0; 3]);
        let p = InputPoint::at([1.0, 0.0, 0.0]);
        let w = exhaustive_winners(&p.position, &l, &mut 0);
        let out = update_by_winners(&p, &mut l, &w, &cfg()).unwrap();
        assert_eq!(out.kind, StepKind::Updated);
        let n = l.node(a).unwrap();
        assert_eq!(n.win_count, 1);
        assert!((n.position[0] - 0.1).abs() < 1e-12);
        assert_eq!(&n.position[1..], &[0.0, 0.0]);
    }

    #[test]
    fn neighbour_moves_at_attenuated_rate() {
        let mut l = layer(5.0);
        let s1 = l.add_node([2.0, 0.0, 0.0]);
        let k = l.add_node([0.0, 0.0, 0.0]);
        l.node_mut(k).win_count = 2;
        l.connect(s1, k).unwrap();
        let p = InputPoint::at([1.0, 0.0, 0.0]);
        let w = WinnerPair {
            s1: Some(s1),
            d1: 1.0,
            s2: None,
            d2: f64::INFINITY,
        };
        update_by_winners(&p, &mut l, &w, &cfg()).unwrap();
        let hk = l.node(k).unwrap().position;
        assert!((hk[0] - 0.005).abs() < 1e-12);
        assert_eq!(l.node(k).unwrap().win_count, 2);
        assert_eq!(l.edge(s1, k).unwrap().age, 1);
    }

    #[test]
    fn neighbour_that_never_won_moves_at_one_percent() {
        let mut l = layer(5.0);
        let s1 = l.add_node([2.0, 0.0, 0.0]);
        let k = l.add_node([0.0, 0.0, 0.0]);
        l.connect(s1, k).unwrap();
        let w = WinnerPair {
            s1: Some(s1),
            d1: 1.0,
            s2: None,
            d2: f64::INFINITY,
        };
        update_by_winners(&InputPoint::at([1.0, 0.0, 0.0]), &mut l, &w, &cfg()).unwrap();
        assert!((l.node(k).unwrap().position[0] - 0.01).abs() < 1e-12);
    }

    #[test]
    fn close_second_winner_gets_connected_and_aged_once() {
        let mut l = layer(0.5);
        let a = l.add_node([0.0; 3]);
        let b = l.add_node([0.6, 0.0, 0.0]);
        let p = InputPoint::at([0.3, 0.0, 0.0]);
        let w = exhaustive_winners(&p.position, &l, &mut 0);
        let out = update_by_winners(&p, &mut l, &w, &cfg()).unwrap();
        assert_eq!(out.kind, StepKind::UpdatedWithEdge);
        assert_eq!(l.edge(a, b).unwrap().age, 1);
    }

    #[test]
    fn stale_winner_is_rejected() {
        let mut l = layer(0.5);
        l.add_node([0.0; 3]);
        let w = WinnerPair {
            s1: Some(NodeId(4)),
            d1: 0.1,
            s2: None,
            d2: f64::INFINITY,
        };
        assert!(update_by_winners(&InputPoint::at([0.0; 3]), &mut l, &w, &cfg()).is_err());
    }

    #[test]
    fn frozen_updates_keep_positions() {
        let mut l = layer(2.0);
        let a = l.add_node([0.0; 3]);
        let b = l.add_node([1.0, 0.0, 0.0]);
        let c = LearnerConfig {
            updates_enabled: false,
            ..cfg()
        };
        let p = InputPoint::at([0.4, 0.0, 0.0]);
        let w = exhaustive_winners(&p.position, &l, &mut 0);
        let out = update_by_winners(&p, &mut l, &w, &c).unwrap();
        assert_eq!(out.kind, StepKind::UpdatedWithEdge);
        assert_eq!(l.node(a).unwrap().position, [0.0; 3]);
        assert_eq!(l.node(b).unwrap().position, [1.0, 0.0, 0.0]);
        assert_eq!(l.node(a).unwrap().win_count, 1);
    }

    #[test]
    fn attribute_noop_without_attributes() {
        let mut l = layer(1.0);
        let a = l.add_node([0.0; 3]);
        let b = l.add_node([0.5, 0.0, 0.0]);
        l.connect(a, b).unwrap();
        let before = l.clone();
        update_attribute_maps(&mut l, a, &InputPoint::at([0.0; 3]), 0.9).unwrap();
        assert_eq!(l.nodes(), before.nodes());
        assert_eq!(l.edge(a, b), before.edge(a, b));
    }

    fn with_normals(na: Vec3, nb: Vec3) -> (LayerGraph, NodeId, NodeId) {
        let mut l = layer(1.0);
        let a = l.add_node([0.0; 3]);
        let b = l.add_node([0.5, 0.0, 0.0]);
        l.node_mut(b).normal = Some(nb);
        l.connect(a, b).unwrap();
        let p = InputPoint {
            position: [0.0; 3],
            normal: Some(na),
            traversability: Some(true),
        };
        update_attribute_maps(&mut l, a, &p, 0.9).unwrap();
        (l, a, b)
    }

    #[test]
    fn parallel_normals_join_normal_graph() {
        let (l, a, b) = with_normals([0.0, 0.0, 1.0], [0.0, 0.0, 1.0]);
        let e = l.edge(a, b).unwrap();
        assert!(e.in_nor);
        // b has no label yet.
        assert!(!e.in_tra);
        assert_eq!(l.node(a).unwrap().traversability, Some(true));
    }

    #[test]
    fn orthogonal_normals_stay_out() {
        let (l, a, b) = with_normals([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        assert!(!l.edge(a, b).unwrap().in_nor);
    }

    #[test]
    fn blended_normal_stays_unit() {
        let mut l = layer(1.0);
        let a = l.add_node([0.0; 3]);
        l.node_mut(a).normal = Some([0.0, 0.0, 1.0]);
        l.node_mut(a).win_count = 1;
        let p = InputPoint {
            position: [0.0; 3],
            normal: Some([1.0, 0.0, 0.0]),
            traversability: None,
        };
        update_attribute_maps(&mut l, a, &p, 0.9).unwrap();
        let n = l.node(a).unwrap().normal.unwrap();
        assert!((geom::norm(&n) - 1.0).abs() < 1e-9);
        assert!(n[0] > 0.0 && n[2] > n[0]);
    }

    #[test]
    fn one_iteration_on_empty_map_makes_one_node() {
        let mut f = FlatLearner::new(LearnerConfig { lambda: 1, ..cfg() }).unwrap();
        let m = f.train_frame(&[InputPoint::at([3.0, 4.0, 0.0])]).unwrap();
        assert_eq!(f.map().base().len(), 1);
        assert_eq!(m.nodes_per_layer, vec![1]);
    }

    #[test]
    fn empty_frame_is_an_error() {
        let mut f = FlatLearner::new(cfg()).unwrap();
        assert_eq!(f.train_frame(&[]).unwrap_err(), MapError::EmptyFrame);
    }

    proptest! {
        #[test]
        fn winner_update_contracts_distance(
            h in prop::array::uniform3(-5.0f64..5.0),
            p in prop::array::uniform3(-5.0f64..5.0),
            prior_wins in 0u32..50,
        ) {
            let mut l = layer(100.0);
            let a = l.add_node(h);
            l.node_mut(a).win_count = prior_wins;
            let before = geom::distance(&h, &p);
            let w = WinnerPair { s1: Some(a), d1: before, s2: None, d2: f64::INFINITY };
            update_by_winners(&InputPoint::at(p), &mut l, &w, &cfg()).unwrap();
            let m = (prior_wins + 1) as f64;
            let after = geom::distance(&l.node(a).unwrap().position, &p);
            prop_assert!((after - (1.0 - 1.0 / (10.0 * m)) * before).abs() <= 1e-12 * (1.0 + before));
        }
    }
}
