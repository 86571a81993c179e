//! Graph-to-map layout: embedding, overlap removal, clustering, countries
//! and coloring.

mod color;
mod countries;
mod embed;
mod kmeans;
mod overlap;
mod quadtree;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::geom::{Point, Rect, Size};
use crate::graph::TopicGraph;
use crate::lod::LabelMetrics;
use crate::TopicId;

pub use color::{color_countries, rgb_distance, ColorConfig, Coloring, Rgb, PALETTE};
pub use countries::{build_countries, country_adjacency, CountryConfig};
pub use embed::{embed, EmbedConfig};
pub use kmeans::{cluster_nodes, within_cluster_sum_of_squares};
pub use overlap::{find_overlaps, remove_overlaps, OverlapConfig};

#[derive(Debug, thiserror::Error)]
pub enum LayoutError {
    #[error("cannot lay out an empty graph")]
    EmptyGraph,
    #[error("overlap removal did not converge after {iterations} iterations; worst remaining overlap {worst_overlap}")]
    OverlapNotConverged {
        iterations: usize,
        worst_overlap: f64,
        remaining_pairs: usize,
    },
    #[error("invalid cluster count {k} for {nodes} nodes")]
    InvalidClusterCount { k: usize, nodes: usize },
    #[error("cluster assignment has {got} entries for {expected} nodes")]
    ClusterMismatch { got: usize, expected: usize },
    #[error("two nodes share position ({x}, {y})")]
    CoincidentNodes { x: f64, y: f64 },
    #[error("triangulation failed: {0}")]
    Triangulation(String),
}

/// Node positions and label boxes, aligned with the graph's node order.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub ids: Vec<TopicId>,
    pub positions: Vec<Point>,
    pub sizes: Vec<Size>,
}

impl Embedding {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: TopicId) -> Option<usize> {
        self.ids.iter().position(|&x| x == id)
    }

    pub fn position(&self, id: TopicId) -> Option<Point> {
        self.index_of(id).map(|i| self.positions[i])
    }

    pub fn rect(&self, i: usize) -> Rect {
        Rect::centered(self.positions[i], self.sizes[i])
    }

    /// Bounding box of all label boxes.
    pub fn bounds(&self) -> Option<Rect> {
        (0..self.len()).map(|i| self.rect(i)).reduce(Rect::union)
    }

    /// Replaces every box with the label box of `level` for the graph's labels
    /// and weights.
    pub fn assign_label_boxes(&mut self, g: &TopicGraph, metrics: &LabelMetrics, level: u8) {
        self.sizes = g
            .nodes()
            .iter()
            .map(|n| metrics.label_size(&n.label, n.weight, level))
            .collect();
    }

    pub fn positions_map(&self) -> BTreeMap<TopicId, [f64; 2]> {
        self.ids
            .iter()
            .zip(&self.positions)
            .map(|(&id, p)| (id, [p.x, p.y]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Country {
    pub cluster: usize,
    pub color: Rgb,
    /// Closed rings without the repeated first point; outer rings are
    /// counterclockwise, holes clockwise.
    pub rings: Vec<Vec<Point>>,
}

/// Cluster assignment plus one country polygon set per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct CountryMap {
    /// Cluster of each node, aligned with the embedding.
    pub cluster_of: Vec<usize>,
    pub countries: Vec<Country>,
    /// The clipping box the countries partition.
    pub bounds: Rect,
}

impl CountryMap {
    pub fn rings(&self) -> Vec<Vec<Vec<Point>>> {
        self.countries.iter().map(|c| c.rings.clone()).collect()
    }

    pub fn total_area(&self) -> f64 {
        self.countries
            .iter()
            .flat_map(|c| &c.rings)
            .map(|r| crate::geom::signed_area(r))
            .sum()
    }
}

/// Every knob of the layout stage.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct LayoutConfig {
    pub embed: EmbedConfig,
    pub overlap: OverlapConfig,
    pub clusters: usize,
    pub countries: CountryConfig,
    pub colors: ColorConfig,
    pub labels: LabelMetrics,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            embed: EmbedConfig::default(),
            overlap: OverlapConfig::default(),
            clusters: 16,
            countries: CountryConfig::default(),
            colors: ColorConfig::default(),
            labels: LabelMetrics::default(),
        }
    }
}

/// Output of [`run_layout`].
#[derive(Debug, Clone, PartialEq)]
pub struct MapLayout {
    pub embedding: Embedding,
    pub countries: CountryMap,
    pub coloring: Coloring,
}

/// Embeds, removes overlaps, clusters, builds and colors countries.
/// The cluster count is capped at the node count.
pub fn run_layout(g: &TopicGraph, cfg: &LayoutConfig, seed: u64) -> Result<MapLayout, LayoutError> {
    let mut embedding = embed(g, &cfg.embed, seed)?;
    embedding.assign_label_boxes(g, &cfg.labels, crate::lod::LEVELS);
    let embedding = remove_overlaps(&embedding, &cfg.overlap)?;
    let k = cfg.clusters.min(embedding.len()).max(1);
    let clusters = cluster_nodes(&embedding.positions, k, seed)?;
    let mut countries = build_countries(&embedding, &clusters, k, &cfg.countries)?;
    let coloring = color_countries(&countries.rings(), &cfg.colors);
    for (c, color) in countries.countries.iter_mut().zip(&coloring.colors) {
        c.color = *color;
    }
    Ok(MapLayout {
        embedding,
        countries,
        coloring,
    })
}

#[cfg(test)]
pub(crate) fn test_graph(n: u32, edges: &[(u32, u32, u32)]) -> TopicGraph {
    use crate::graph::{Edge, TopicNode};
    let nodes = (0..n)
        .map(|i| TopicNode {
            id: TopicId(i),
            label: format!("n{i}"),
            weight: 1,
        })
        .collect::<Vec<TopicNode>>();
    let mut merged = BTreeMap::new();
    for &(u, v, w) in edges {
        if u != v {
            merged.insert((u.min(v), u.max(v)), w);
        }
    }
    let edges = merged
        .into_iter()
        .map(|((u, v), w)| Edge {
            u: TopicId(u),
            v: TopicId(v),
            weight: w,
        })
        .collect();
    TopicGraph::from_parts(nodes, edges).expect("valid test graph")
}
