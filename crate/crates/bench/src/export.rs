//! JSON map documents with per-layer nodes, edges and summary statistics.

use std::fs;
use std::path::Path;

use mlatc::geom::Vec3;
use mlatc::{EdgeRecord, LayerGraph, LearnerConfig, MapError, MultiLayerMap, NodeId, NodeRecord};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Map(#[from] MapError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapDocument {
    pub config: LearnerConfig,
    pub summary: Vec<LayerSummary>,
    pub layers: Vec<LayerDocument>,
}

/// Counts for one layer. `node_ratio_pct` is `100 * |V_l| / |V_(l-1)|`,
/// absent for layer 1 and when the layer below is empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub level: usize,
    pub nodes: usize,
    pub edges: usize,
    pub node_ratio_pct: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerDocument {
    pub level: usize,
    pub vigilance: f64,
    pub deleted_edges: u64,
    pub deleted_age_sum: u64,
    pub nodes: Vec<NodeDocument>,
    pub edges: Vec<EdgeDocument>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeDocument {
    pub id: u32,
    pub position: Vec3,
    pub win_count: u32,
    pub parent: Option<u32>,
    pub children: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal: Option<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traversability: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeDocument {
    pub i: u32,
    pub j: u32,
    pub age: u32,
    pub in_nor: bool,
    pub in_tra: bool,
}

pub fn summarize(map: &MultiLayerMap) -> Vec<LayerSummary> {
    let mut below: Option<usize> = None;
    map.layers()
        .iter()
        .map(|l| {
            let ratio = below
                .filter(|&b| b > 0)
                .map(|b| 100.0 * l.len() as f64 / b as f64);
            below = Some(l.len());
            LayerSummary {
                level: l.level(),
                nodes: l.len(),
                edges: l.edge_count(),
                node_ratio_pct: ratio,
            }
        })
        .collect()
}

fn layer_document(layer: &LayerGraph) -> LayerDocument {
    let nodes = layer
        .nodes()
        .iter()
        .map(|n| NodeDocument {
            id: n.id.0,
            position: n.position,
            win_count: n.win_count,
            parent: n.parent.map(|p| p.0),
            children: n.children.iter().map(|c| c.0).collect(),
            normal: n.normal,
            traversability: n.traversability,
        })
        .collect();
    let mut edges: Vec<EdgeDocument> = layer
        .edges()
        .map(|e| EdgeDocument {
            i: e.a.0,
            j: e.b.0,
            age: e.age,
            in_nor: e.in_nor,
            in_tra: e.in_tra,
        })
        .collect();
    edges.sort_by_key(|e| (e.i, e.j));
    LayerDocument {
        level: layer.level(),
        vigilance: layer.vigilance(),
        deleted_edges: layer.age_stats().deleted_count(),
        deleted_age_sum: layer.age_stats().deleted_age_sum(),
        nodes,
        edges,
    }
}

pub fn to_document(map: &MultiLayerMap) -> MapDocument {
    MapDocument {
        config: *map.config(),
        summary: summarize(map),
        layers: map.layers().iter().map(layer_document).collect(),
    }
}

/// Rebuilds a map. Vigilance is recomputed from the configuration.
pub fn from_document(doc: &MapDocument) -> Result<MultiLayerMap, ExportError> {
    let config = doc.config;
    let mut layers = Vec::with_capacity(doc.layers.len());
    for (idx, l) in doc.layers.iter().enumerate() {
        if l.level != idx + 1 {
            return Err(MapError::InvalidConfig(format!(
                "layer {} stored at position {}",
                l.level,
                idx + 1
            ))
            .into());
        }
        let nodes = l
            .nodes
            .iter()
            .map(|n| NodeRecord {
                id: NodeId(n.id),
                position: n.position,
                normal: n.normal,
                traversability: n.traversability,
                win_count: n.win_count,
                parent: n.parent.map(NodeId),
                children: n.children.iter().copied().map(NodeId).collect(),
            })
            .collect();
        let edges = l.edges.iter().map(|e| EdgeRecord {
            a: NodeId(e.i.min(e.j)),
            b: NodeId(e.i.max(e.j)),
            age: e.age,
            in_nor: e.in_nor,
            in_tra: e.in_tra,
        });
        let base = LayerGraph::for_level(l.level, &config);
        layers.push(LayerGraph::from_parts(
            base,
            nodes,
            edges,
            l.deleted_edges,
            l.deleted_age_sum,
        )?);
    }
    Ok(MultiLayerMap::from_layers(config, layers)?)
}

pub fn to_json(map: &MultiLayerMap) -> Result<String, ExportError> {
    let mut s = serde_json::to_string_pretty(&to_document(map))?;
    s.push('\n');
    Ok(s)
}

pub fn export_map(map: &MultiLayerMap, path: &Path) -> Result<(), ExportError> {
    fs::write(path, to_json(map)?).map_err(|source| ExportError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn import_map(path: &Path) -> Result<MultiLayerMap, ExportError> {
    let text = fs::read_to_string(path).map_err(|source| ExportError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_document(&serde_json::from_str(&text)?)
}
