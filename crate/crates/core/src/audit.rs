//! Full-scan structural checks used by tests and the benchmark harness.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::geom::{self, Vec3};
use crate::graph::{MultiLayerMap, NodeId};
use crate::hierarchy::{SearchThresholds, WinnerSets};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Violation {
    #[error("layer {level}: vigilance {found} differs from schedule value {expected}")]
    Vigilance {
        level: usize,
        found: f64,
        expected: f64,
    },
    #[error("layer {level}: edge {a}-{b} is not listed under both endpoints")]
    Asymmetric { level: usize, a: NodeId, b: NodeId },
    #[error("layer {level}: self-loop on {node}")]
    SelfLoop { level: usize, node: NodeId },
    #[error("layer {level}: age histogram disagrees with a recount of the edges")]
    AgeHistogram { level: usize },
    #[error("top layer holds {0} nodes, expected 1")]
    TopNotSingleton(usize),
    #[error("layer {level}: node {node} should have a parent")]
    Orphan { level: usize, node: NodeId },
    #[error("layer {level}: node {node} is claimed by {claims} parents")]
    Partition {
        level: usize,
        node: NodeId,
        claims: usize,
    },
    #[error("layer {level}: node {node} parent pointer disagrees with children lists")]
    ParentLink { level: usize, node: NodeId },
    #[error("layer 1 node {0} has children")]
    BaseChildren(NodeId),
    #[error("layer {level}: winner set is not sorted at position {pos}")]
    Unsorted { level: usize, pos: usize },
    #[error("layer {level}: candidate {node} at {distance} exceeds search radius {radius}")]
    OutsideRadius {
        level: usize,
        node: NodeId,
        distance: f64,
        radius: f64,
    },
    #[error("layer {level}: candidate {node} is not a child of any candidate above")]
    NotAChild { level: usize, node: NodeId },
    #[error("layer {level}: node {node} lies {distance} from its layer-{ancestor_level} ancestor, bound {bound}")]
    AncestorBound {
        level: usize,
        node: NodeId,
        ancestor_level: usize,
        distance: f64,
        bound: f64,
    },
}

/// Checks every structural invariant of a map between training iterations:
/// vigilance schedule, adjacency symmetry, histogram consistency, the
/// single root, and that each layer's children lists partition the layer
/// below it.
pub fn check_map(map: &MultiLayerMap) -> Result<(), Violation> {
    let config = map.config();
    for layer in map.layers() {
        let level = layer.level();
        let expected = config.vigilance(level);
        if layer.vigilance() != expected {
            return Err(Violation::Vigilance {
                level,
                found: layer.vigilance(),
                expected,
            });
        }
        let mut recount = BTreeMap::<u32, u64>::new();
        for e in layer.edges() {
            if e.a == e.b {
                return Err(Violation::SelfLoop { level, node: e.a });
            }
            if !layer.neighbors(e.a).any(|n| n == e.b) || !layer.neighbors(e.b).any(|n| n == e.a) {
                return Err(Violation::Asymmetric {
                    level,
                    a: e.a,
                    b: e.b,
                });
            }
            *recount.entry(e.age).or_default() += 1;
        }
        let listed: usize = layer.nodes().iter().map(|n| layer.degree(n.id)).sum();
        if listed != 2 * layer.edge_count() {
            return Err(Violation::Asymmetric {
                level,
                a: NodeId(0),
                b: NodeId(0),
            });
        }
        let hist: BTreeMap<u32, u64> = layer.age_stats().histogram().iter().collect();
        if hist != recount || layer.age_stats().histogram().len() as usize != layer.edge_count() {
            return Err(Violation::AgeHistogram { level });
        }
    }

    let base = map.base();
    if let Some(n) = base.nodes().iter().find(|n| !n.children.is_empty()) {
        return Err(Violation::BaseChildren(n.id));
    }
    if !base.is_empty() && map.top().len() != 1 {
        return Err(Violation::TopNotSingleton(map.top().len()));
    }
    if map.top().nodes().iter().any(|n| n.parent.is_some()) {
        return Err(Violation::ParentLink {
            level: map.layer_count(),
            node: NodeId(0),
        });
    }

    for idx in 1..map.layer_count() {
        let upper = map.layer(idx);
        let lower = map.layer(idx - 1);
        let mut claims = vec![0usize; lower.len()];
        for parent in upper.nodes() {
            for &c in &parent.children {
                let Some(child) = lower.node(c) else {
                    return Err(Violation::ParentLink {
                        level: lower.level(),
                        node: c,
                    });
                };
                claims[c.index()] += 1;
                if child.parent != Some(parent.id) {
                    return Err(Violation::ParentLink {
                        level: lower.level(),
                        node: c,
                    });
                }
            }
        }
        for (i, &n) in claims.iter().enumerate() {
            let node = NodeId(i as u32);
            match n {
                1 => {}
                0 => {
                    return Err(Violation::Orphan {
                        level: lower.level(),
                        node,
                    })
                }
                _ => {
                    return Err(Violation::Partition {
                        level: lower.level(),
                        node,
                        claims: n,
                    })
                }
            }
        }
    }
    Ok(())
}

/// Checks sortedness, radius compliance and the child-of relation of a
/// search result for query `p`.
pub fn check_winner_sets(
    p: &Vec3,
    sets: &WinnerSets,
    map: &MultiLayerMap,
    thresholds: &SearchThresholds,
) -> Result<(), Violation> {
    let top = sets.per_layer.len();
    for (idx, set) in sets.per_layer.iter().enumerate() {
        let level = idx + 1;
        for (pos, w) in set.windows(2).enumerate() {
            if w[0].1 > w[1].1 {
                return Err(Violation::Unsorted { level, pos });
            }
        }
        for &(node, d) in set {
            let pos = map.layer(idx).node(node).map(|n| n.position);
            debug_assert_eq!(pos.map(|q| geom::distance(p, &q)), Some(d));
            if level < top {
                let radius = thresholds.get(level);
                if d > radius {
                    return Err(Violation::OutsideRadius {
                        level,
                        node,
                        distance: d,
                        radius,
                    });
                }
                let parent = map.layer(idx).node(node).and_then(|n| n.parent);
                if !parent.is_some_and(|par| sets.per_layer[idx + 1].iter().any(|&(w, _)| w == par))
                {
                    return Err(Violation::NotAChild { level, node });
                }
            }
        }
    }
    Ok(())
}

/// Verifies that every node lies within the summed vigilance radii of the
/// intermediate layers from each of its ancestors. Holds exactly when nodes
/// never move (insertion-only mode).
pub fn check_ancestor_bounds(map: &MultiLayerMap) -> Result<(), Violation> {
    let config = map.config();
    for idx in 0..map.layer_count() {
        for node in map.layer(idx).nodes() {
            let mut bound = 0.0;
            let mut parent = node.parent;
            let mut up = idx + 1;
            while let Some(pid) = parent {
                let anc = map.layer(up).node(pid).expect("parent exists");
                bound += config.vigilance(up + 1);
                let d = geom::distance(&node.position, &anc.position);
                if d > bound {
                    return Err(Violation::AncestorBound {
                        level: idx + 1,
                        node: node.id,
                        ancestor_level: up + 1,
                        distance: d,
                        bound,
                    });
                }
                parent = anc.parent;
                up += 1;
            }
        }
    }
    Ok(())
}
