//! Multi-layer graph data model: nodes, aged edges, edge-age statistics and
//! parent/child links between adjacent layers.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::MapError;
use crate::geom::Vec3;
use crate::stats::AgeHistogram;

/// Identifier of a node, unique within its layer. Identifiers are dense and
/// assigned in creation order starting at 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeRecord {
    pub id: NodeId,
    pub position: Vec3,
    /// Unit surface normal; only maintained on layer 1.
    pub normal: Option<Vec3>,
    /// Binary traversability label; only maintained on layer 1.
    pub traversability: Option<bool>,
    /// Number of times this node was the first winner.
    pub win_count: u32,
    /// Node in the layer above that owns this node.
    pub parent: Option<NodeId>,
    /// Nodes in the layer below owned by this node.
    pub children: Vec<NodeId>,
}

impl NodeRecord {
    fn new(id: NodeId, position: Vec3) -> Self {
        NodeRecord {
            id,
            position,
            normal: None,
            traversability: None,
            win_count: 0,
            parent: None,
            children: Vec::new(),
        }
    }
}

/// Undirected edge of the positional graph. `a < b` always.
///
/// The `in_nor`/`in_tra` flags mark membership in the normal and
/// traversability graphs, which are subsets of the positional edge set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeRecord {
    pub a: NodeId,
    pub b: NodeId,
    pub age: u32,
    pub in_nor: bool,
    pub in_tra: bool,
}

impl EdgeRecord {
    fn new(i: NodeId, j: NodeId) -> Self {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        EdgeRecord {
            a,
            b,
            age: 0,
            in_nor: false,
            in_tra: false,
        }
    }

    /// The endpoint that is not `n`.
    pub fn other(&self, n: NodeId) -> NodeId {
        if self.a == n {
            self.b
        } else {
            self.a
        }
    }
}

/// Which edges an aging step may prune.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgingScope {
    /// Only edges incident to the first winner (their ages are the only ones
    /// that changed).
    #[default]
    Incident,
    /// Every edge in the layer is compared against the threshold.
    FullSweep,
}

/// Current edge ages plus a summary of the ages of every pruned edge.
#[derive(Clone, Debug, Default)]
pub struct AgeStats {
    deleted_count: u64,
    deleted_age_sum: u64,
    histogram: AgeHistogram,
}

impl AgeStats {
    pub fn deleted_count(&self) -> u64 {
        self.deleted_count
    }

    /// Sum of all pruned ages; the mean is derived from it exactly.
    pub fn deleted_age_sum(&self) -> u64 {
        self.deleted_age_sum
    }

    /// Arithmetic mean of the ages of all pruned edges (0 before any pruning).
    pub fn deleted_mean(&self) -> f64 {
        if self.deleted_count == 0 {
            0.0
        } else {
            self.deleted_age_sum as f64 / self.deleted_count as f64
        }
    }

    pub fn histogram(&self) -> &AgeHistogram {
        &self.histogram
    }

    fn record_deletion(&mut self, age: u32) {
        self.deleted_count += 1;
        self.deleted_age_sum += age as u64;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    /// Training iterations per frame.
    pub lambda: usize,
    /// Layer-1 vigilance radius in meters.
    pub base_vigilance: f64,
    /// Vigilance ratio between consecutive layers.
    pub alpha: f64,
    /// Minimum normal dot product for an edge to join the normal graph.
    pub normal_edge_threshold: f64,
    /// When false, winners are never moved (insertion-only mode).
    pub updates_enabled: bool,
    /// Edge count below which no pruning threshold is defined.
    pub min_edges_for_aging: usize,
    pub rng_seed: u64,
    pub aging_scope: AgingScope,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            lambda: 4000,
            base_vigilance: 0.5,
            alpha: 4.0,
            normal_edge_threshold: 0.9,
            updates_enabled: true,
            min_edges_for_aging: 4,
            rng_seed: 0,
            aging_scope: AgingScope::Incident,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), MapError> {
        if self.lambda < 1 {
            return Err(MapError::InvalidConfig("lambda must be at least 1".into()));
        }
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return Err(MapError::InvalidConfig(format!(
                "alpha must be a finite value > 1, got {}",
                self.alpha
            )));
        }
        if !(self.base_vigilance > 0.0 && self.base_vigilance.is_finite()) {
            return Err(MapError::InvalidConfig(format!(
                "base vigilance must be a finite value > 0, got {}",
                self.base_vigilance
            )));
        }
        if !(0.0..=1.0).contains(&self.normal_edge_threshold) {
            return Err(MapError::InvalidConfig(format!(
                "normal edge threshold must lie in [0, 1], got {}",
                self.normal_edge_threshold
            )));
        }
        if self.min_edges_for_aging < 1 {
            return Err(MapError::InvalidConfig(
                "min_edges_for_aging must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Vigilance radius of layer `level` (1-based): `alpha^(level-1) * base`.
    pub fn vigilance(&self, level: usize) -> f64 {
        assert!(level >= 1, "layers are numbered from 1");
        self.alpha.powi(level as i32 - 1) * self.base_vigilance
    }
}

/// One resolution layer: nodes, a symmetric aged edge store and its age
/// statistics.
#[derive(Clone, Debug)]
pub struct LayerGraph {
    level: usize,
    vigilance: f64,
    nodes: Vec<NodeRecord>,
    // (neighbour, edge slot) pairs; every edge is listed under both endpoints.
    adjacency: Vec<Vec<(NodeId, u32)>>,
    edges: Vec<Option<EdgeRecord>>,
    free_slots: Vec<u32>,
    edge_count: usize,
    age_stats: AgeStats,
    g_max: Option<f64>,
    min_edges_for_aging: usize,
    aging_scope: AgingScope,
    deletion_log: Option<Vec<u32>>,
}

impl LayerGraph {
    pub fn new(
        level: usize,
        vigilance: f64,
        min_edges_for_aging: usize,
        aging_scope: AgingScope,
    ) -> Self {
        LayerGraph {
            level,
            vigilance,
            nodes: Vec::new(),
            adjacency: Vec::new(),
            edges: Vec::new(),
            free_slots: Vec::new(),
            edge_count: 0,
            age_stats: AgeStats::default(),
            g_max: None,
            min_edges_for_aging,
            aging_scope,
            deletion_log: None,
        }
    }

    /// Layer built for `level` under `config`.
    pub fn for_level(level: usize, config: &LearnerConfig) -> Self {
        Self::new(
            level,
            config.vigilance(level),
            config.min_edges_for_aging,
            config.aging_scope,
        )
    }

    /// Rebuilds a layer from exported parts. Edge ages are taken as given and
    /// the pruning threshold is recomputed from them.
    pub fn from_parts(
        mut base: LayerGraph,
        nodes: Vec<NodeRecord>,
        edges: impl IntoIterator<Item = EdgeRecord>,
        deleted_count: u64,
        deleted_age_sum: u64,
    ) -> Result<Self, MapError> {
        for (i, n) in nodes.iter().enumerate() {
            if n.id.index() != i {
                return Err(MapError::MissingNode {
                    layer: base.level,
                    node: NodeId(i as u32),
                });
            }
        }
        base.adjacency = vec![Vec::new(); nodes.len()];
        base.nodes = nodes;
        for e in edges {
            base.connect(e.a, e.b)?;
            let slot = base.find_slot(e.a, e.b).expect("edge just inserted");
            let rec = base.edges[slot as usize].as_mut().expect("live slot");
            rec.in_nor = e.in_nor;
            rec.in_tra = e.in_tra;
            base.age_stats.histogram.shift(0, e.age);
            rec.age = e.age;
        }
        base.age_stats.deleted_count = deleted_count;
        base.age_stats.deleted_age_sum = deleted_age_sum;
        base.refresh_g_max();
        Ok(base)
    }

    /// 1-based layer index.
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn vigilance(&self) -> f64 {
        self.vigilance
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeRecord> {
        self.nodes.get(id.index())
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.index() < self.nodes.len()
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> &mut NodeRecord {
        &mut self.nodes[id.index()]
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn age_stats(&self) -> &AgeStats {
        &self.age_stats
    }

    pub fn min_edges_for_aging(&self) -> usize {
        self.min_edges_for_aging
    }

    pub fn aging_scope(&self) -> AgingScope {
        self.aging_scope
    }

    /// All live edges, in storage order.
    pub fn edges(&self) -> impl Iterator<Item = &EdgeRecord> + '_ {
        self.edges.iter().flatten()
    }

    pub fn neighbors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency
            .get(id.index())
            .into_iter()
            .flatten()
            .map(|&(n, _)| n)
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.adjacency.get(id.index()).map_or(0, Vec::len)
    }

    pub fn incident_edges(&self, id: NodeId) -> impl Iterator<Item = &EdgeRecord> + '_ {
        self.adjacency
            .get(id.index())
            .into_iter()
            .flatten()
            .map(|&(_, slot)| self.edges[slot as usize].as_ref().expect("live slot"))
    }

    pub fn edge(&self, i: NodeId, j: NodeId) -> Option<&EdgeRecord> {
        self.find_slot(i, j)
            .map(|s| self.edges[s as usize].as_ref().expect("live slot"))
    }

    pub(crate) fn edge_mut(&mut self, i: NodeId, j: NodeId) -> Option<&mut EdgeRecord> {
        self.find_slot(i, j)
            .map(|s| self.edges[s as usize].as_mut().expect("live slot"))
    }

    fn find_slot(&self, i: NodeId, j: NodeId) -> Option<u32> {
        self.adjacency
            .get(i.index())?
            .iter()
            .find(|&&(n, _)| n == j)
            .map(|&(_, s)| s)
    }

    fn check(&self, id: NodeId) -> Result<(), MapError> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(MapError::MissingNode {
                layer: self.level,
                node: id,
            })
        }
    }

    /// Appends a node at `position` with no win count, links or edges.
    pub fn add_node(&mut self, position: Vec3) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(NodeRecord::new(id, position));
        self.adjacency.push(Vec::new());
        id
    }

    /// Creates edge `{i, j}` with age 0, or resets the age of an existing one.
    pub fn connect(&mut self, i: NodeId, j: NodeId) -> Result<(), MapError> {
        if i == j {
            return Err(MapError::SelfLoop(i));
        }
        self.check(i)?;
        self.check(j)?;
        if let Some(slot) = self.find_slot(i, j) {
            let e = self.edges[slot as usize].as_mut().expect("live slot");
            self.age_stats.histogram.shift(e.age, 0);
            e.age = 0;
            return Ok(());
        }
        let rec = EdgeRecord::new(i, j);
        let slot = match self.free_slots.pop() {
            Some(s) => {
                self.edges[s as usize] = Some(rec);
                s
            }
            None => {
                self.edges.push(Some(rec));
                (self.edges.len() - 1) as u32
            }
        };
        self.adjacency[i.index()].push((j, slot));
        self.adjacency[j.index()].push((i, slot));
        self.edge_count += 1;
        self.age_stats.histogram.insert(0);
        Ok(())
    }

    /// Removes edge `{i, j}` without recording it as pruned. Returns its age.
    pub fn disconnect(&mut self, i: NodeId, j: NodeId) -> Option<u32> {
        let slot = self.find_slot(i, j)?;
        Some(self.drop_slot(slot))
    }

    fn drop_slot(&mut self, slot: u32) -> u32 {
        let e = self.edges[slot as usize].take().expect("live slot");
        self.adjacency[e.a.index()].retain(|&(_, s)| s != slot);
        self.adjacency[e.b.index()].retain(|&(_, s)| s != slot);
        self.free_slots.push(slot);
        self.edge_count -= 1;
        self.age_stats.histogram.remove(e.age);
        e.age
    }

    fn prune_slot(&mut self, slot: u32) {
        let age = self.drop_slot(slot);
        self.age_stats.record_deletion(age);
        if let Some(log) = self.deletion_log.as_mut() {
            log.push(age);
        }
    }

    /// Increments the age of every edge incident to `s1`.
    pub fn age_incident_edges(&mut self, s1: NodeId) -> Result<(), MapError> {
        self.check(s1)?;
        for &(_, slot) in &self.adjacency[s1.index()] {
            let e = self.edges[slot as usize].as_mut().expect("live slot");
            self.age_stats.histogram.shift(e.age, e.age + 1);
            e.age += 1;
        }
        Ok(())
    }

    /// Upper fence of the current edge ages: `Q3 + (Q3 - Q1)`.
    pub fn g_thr(&self) -> Result<f64, MapError> {
        let h = &self.age_stats.histogram;
        if (h.len() as usize) < self.min_edges_for_aging {
            return Err(MapError::InsufficientStatistics {
                layer: self.level,
                edges: h.len() as usize,
                required: self.min_edges_for_aging,
            });
        }
        let q3 = h.quantile(0.75).expect("non-empty");
        let q1 = h.quantile(0.25).expect("non-empty");
        Ok(q3 + (q3 - q1))
    }

    /// Pruning threshold: the fence blended with the mean pruned age, weighted
    /// by how many edges have been pruned relative to how many are alive.
    pub fn g_max(&self) -> Result<f64, MapError> {
        let thr = self.g_thr()?;
        Ok(blend_g_max(
            self.age_stats.deleted_mean(),
            self.age_stats.deleted_count,
            thr,
            self.age_stats.histogram.len(),
        ))
    }

    /// Threshold computed at the end of the last update step.
    pub fn maintained_g_max(&self) -> Option<f64> {
        self.g_max
    }

    pub fn refresh_g_max(&mut self) {
        self.g_max = self.g_max().ok();
    }

    /// Prunes edges older than the maintained threshold. With
    /// [`AgingScope::Incident`] only edges touching `around` are examined.
    /// Nothing is pruned while the threshold is undefined.
    pub fn remove_aged_edges(&mut self, around: NodeId) -> usize {
        let Some(threshold) = self.g_max else {
            return 0;
        };
        match self.aging_scope {
            AgingScope::Incident => self.remove_edges_older_than(around, threshold),
            AgingScope::FullSweep => self.remove_all_edges_older_than(threshold),
        }
    }

    /// Prunes edges incident to `around` whose age exceeds `threshold`.
    pub fn remove_edges_older_than(&mut self, around: NodeId, threshold: f64) -> usize {
        let Some(adj) = self.adjacency.get(around.index()) else {
            return 0;
        };
        let stale: Vec<u32> = adj
            .iter()
            .map(|&(_, s)| s)
            .filter(|&s| self.edges[s as usize].as_ref().expect("live slot").age as f64 > threshold)
            .collect();
        for &s in &stale {
            self.prune_slot(s);
        }
        stale.len()
    }

    /// Prunes every edge in the layer whose age exceeds `threshold`.
    pub fn remove_all_edges_older_than(&mut self, threshold: f64) -> usize {
        let stale: Vec<u32> = self
            .edges
            .iter()
            .enumerate()
            .filter_map(|(s, e)| e.filter(|e| e.age as f64 > threshold).map(|_| s as u32))
            .collect();
        for &s in &stale {
            self.prune_slot(s);
        }
        stale.len()
    }

    /// Starts recording every pruned age, for auditing the running statistics.
    pub fn enable_deletion_log(&mut self) {
        self.deletion_log.get_or_insert_with(Vec::new);
    }

    pub fn deletion_log(&self) -> Option<&[u32]> {
        self.deletion_log.as_deref()
    }

    /// Moves every neighbour `k` of `s1` toward `target` at rate
    /// `1 / (100 * m_k)`; a neighbour that never won moves at rate 1/100.
    pub(crate) fn pull_neighbors(&mut self, s1: NodeId, target: &Vec3) {
        let adj = &self.adjacency[s1.index()];
        for &(k, _) in adj {
            let node = &mut self.nodes[k.index()];
            let rate = 1.0 / (100.0 * node.win_count.max(1) as f64);
            crate::geom::step_toward(&mut node.position, target, rate);
        }
    }
}

/// `mean_del * w + thr * (1 - w)` with `w = n_del / (n_del + n_live)`.
pub fn blend_g_max(deleted_mean: f64, deleted_count: u64, g_thr: f64, live_count: u64) -> f64 {
    let total = deleted_count + live_count;
    if total == 0 {
        return g_thr;
    }
    let w = deleted_count as f64 / total as f64;
    deleted_mean * w + g_thr * (1.0 - w)
}

/// Links `child` (in `lower`) to `parent` (in the layer directly above).
pub fn set_parent(
    lower: &mut LayerGraph,
    child: NodeId,
    upper: &mut LayerGraph,
    parent: NodeId,
) -> Result<(), MapError> {
    if upper.level != lower.level + 1 {
        return Err(MapError::LayerMismatch {
            lower: lower.level,
            upper: upper.level,
        });
    }
    lower.check(child)?;
    upper.check(parent)?;
    if let Some(existing) = lower.nodes[child.index()].parent {
        return Err(MapError::AlreadyParented {
            layer: lower.level,
            child,
            parent: existing,
        });
    }
    lower.nodes[child.index()].parent = Some(parent);
    upper.nodes[parent.index()].children.push(child);
    Ok(())
}

/// Ordered stack of layers 1..=L sharing one configuration.
#[derive(Clone, Debug)]
pub struct MultiLayerMap {
    layers: Vec<LayerGraph>,
    config: LearnerConfig,
    log_deletions: bool,
}

impl MultiLayerMap {
    /// A map with a single empty layer.
    pub fn new(config: LearnerConfig) -> Result<Self, MapError> {
        config.validate()?;
        let layers = vec![LayerGraph::for_level(1, &config)];
        Ok(MultiLayerMap {
            layers,
            config,
            log_deletions: false,
        })
    }

    /// Assembles a map from previously built layers without further checks
    /// beyond the configuration; use [`crate::audit::check_map`] to verify.
    pub fn from_layers(config: LearnerConfig, layers: Vec<LayerGraph>) -> Result<Self, MapError> {
        config.validate()?;
        if layers.is_empty() {
            return Err(MapError::InvalidConfig(
                "a map needs at least one layer".into(),
            ));
        }
        Ok(MultiLayerMap {
            layers,
            config,
            log_deletions: false,
        })
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn base_vigilance(&self) -> f64 {
        self.config.base_vigilance
    }

    pub fn alpha(&self) -> f64 {
        self.config.alpha
    }

    /// Number of layers L.
    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[LayerGraph] {
        &self.layers
    }

    /// Layer at 0-based position `idx` (layer index `idx + 1`).
    pub fn layer(&self, idx: usize) -> &LayerGraph {
        &self.layers[idx]
    }

    pub(crate) fn layer_mut(&mut self, idx: usize) -> &mut LayerGraph {
        &mut self.layers[idx]
    }

    pub fn base(&self) -> &LayerGraph {
        &self.layers[0]
    }

    pub fn top(&self) -> &LayerGraph {
        self.layers.last().expect("at least one layer")
    }

    pub fn total_nodes(&self) -> usize {
        self.layers.iter().map(LayerGraph::len).sum()
    }

    pub fn nodes_per_layer(&self) -> Vec<usize> {
        self.layers.iter().map(LayerGraph::len).collect()
    }

    pub fn edges_per_layer(&self) -> Vec<usize> {
        self.layers.iter().map(LayerGraph::edge_count).collect()
    }

    /// Appends an empty layer L+1 and returns it.
    pub(crate) fn push_layer(&mut self) -> &mut LayerGraph {
        let level = self.layers.len() + 1;
        let mut layer = LayerGraph::for_level(level, &self.config);
        if self.log_deletions {
            layer.enable_deletion_log();
        }
        self.layers.push(layer);
        self.layers.last_mut().expect("just pushed")
    }

    /// Records `parent` (in layer `lower_idx + 2`) as the parent of `child`
    /// (in layer `lower_idx + 1`).
    pub fn set_parent(
        &mut self,
        lower_idx: usize,
        child: NodeId,
        parent: NodeId,
    ) -> Result<(), MapError> {
        if lower_idx + 1 >= self.layers.len() {
            return Err(MapError::LayerMismatch {
                lower: lower_idx + 1,
                upper: lower_idx + 2,
            });
        }
        let (lo, hi) = self.layers.split_at_mut(lower_idx + 1);
        set_parent(&mut lo[lower_idx], child, &mut hi[0], parent)
    }

    /// Turns on pruned-age logging in every current and future layer.
    pub fn enable_deletion_logs(&mut self) {
        self.log_deletions = true;
        for l in &mut self.layers {
            l.enable_deletion_log();
        }
    }
}
