//! Weighted topic co-occurrence graph.

mod stats;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::ingest::Corpus;
use crate::normalize::TopicLexicon;
use crate::TopicId;

pub use stats::{
    compute_stats, compute_stats_with, AveragePath, GiantComponent, GraphStats, RankedTopic,
    StatsConfig,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicNode {
    pub id: TopicId,
    pub label: String,
    /// Number of profiles listing the topic.
    pub weight: u32,
}

/// Undirected edge with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub u: TopicId,
    pub v: TopicId,
    /// Number of profiles listing both endpoints.
    pub weight: u32,
}

impl Serialize for Edge {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (self.u, self.v, self.weight).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Edge {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (u, v, weight) = <(TopicId, TopicId, u32)>::deserialize(d)?;
        Ok(Edge { u, v, weight })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("edge ({0}, {1}) references a missing node")]
    MissingNode(TopicId, TopicId),
    #[error("invalid edge ({0}, {1}): endpoints must be distinct and ordered")]
    BadEdge(TopicId, TopicId),
    #[error("duplicate node {0}")]
    DuplicateNode(TopicId),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(TopicId, TopicId),
}

/// Nodes sorted by id, edges sorted by `(u, v)`.
///
/// The JSON form is `{"nodes":[{"id","label","weight"}],"edges":[[u,v,w]]}`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct TopicGraph {
    nodes: Vec<TopicNode>,
    edges: Vec<Edge>,
}

#[derive(Deserialize)]
struct RawGraph {
    nodes: Vec<TopicNode>,
    edges: Vec<Edge>,
}

impl<'de> Deserialize<'de> for TopicGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawGraph::deserialize(d)?;
        TopicGraph::from_parts(raw.nodes, raw.edges).map_err(serde::de::Error::custom)
    }
}

impl TopicGraph {
    /// Validates and sorts the parts.
    pub fn from_parts(mut nodes: Vec<TopicNode>, mut edges: Vec<Edge>) -> Result<Self, GraphError> {
        nodes.sort_by_key(|n| n.id);
        for w in nodes.windows(2) {
            if w[0].id == w[1].id {
                return Err(GraphError::DuplicateNode(w[0].id));
            }
        }
        edges.sort();
        for w in edges.windows(2) {
            if (w[0].u, w[0].v) == (w[1].u, w[1].v) {
                return Err(GraphError::DuplicateEdge(w[0].u, w[0].v));
            }
        }
        let g = TopicGraph { nodes, edges };
        for e in &g.edges {
            if e.u >= e.v {
                return Err(GraphError::BadEdge(e.u, e.v));
            }
            if g.index_of(e.u).is_none() || g.index_of(e.v).is_none() {
                return Err(GraphError::MissingNode(e.u, e.v));
            }
        }
        Ok(g)
    }

    pub fn nodes(&self) -> &[TopicNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Position of `id` in [`TopicGraph::nodes`].
    pub fn index_of(&self, id: TopicId) -> Option<usize> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok()
    }

    pub fn node(&self, id: TopicId) -> Option<&TopicNode> {
        self.index_of(id).map(|i| &self.nodes[i])
    }

    /// Edges as `(index_u, index_v, weight)` over node positions.
    pub fn indexed_edges(&self) -> Vec<(usize, usize, u32)> {
        let pos: HashMap<TopicId, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id, i))
            .collect();
        self.edges
            .iter()
            .map(|e| (pos[&e.u], pos[&e.v], e.weight))
            .collect()
    }

    /// Neighbor lists over node positions, each sorted by neighbor position.
    pub fn adjacency(&self) -> Vec<Vec<(usize, u32)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (a, b, w) in self.indexed_edges() {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Neighbors of `id` with edge weights, heaviest first (ties by id).
    pub fn neighbors(&self, id: TopicId) -> Vec<(TopicId, u32)> {
        let mut out: Vec<(TopicId, u32)> = self
            .edges
            .iter()
            .filter_map(|e| {
                if e.u == id {
                    Some((e.v, e.weight))
                } else if e.v == id {
                    Some((e.u, e.weight))
                } else {
                    None
                }
            })
            .collect();
        out.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        out
    }
}

/// Counts topic listings and co-listings over the annotated corpus.
///
/// Only topics listed by at least one profile become nodes, so building over
/// a region-restricted corpus yields that region's weights.
pub fn build_graph(corpus: &Corpus, lexicon: &TopicLexicon) -> TopicGraph {
    let mut node_w: BTreeMap<TopicId, u32> = BTreeMap::new();
    let mut edge_w: HashMap<(TopicId, TopicId), u32> = HashMap::new();
    for p in corpus.profiles() {
        for (i, &a) in p.topics.iter().enumerate() {
            *node_w.entry(a).or_default() += 1;
            for &b in &p.topics[i + 1..] {
                let key = if a < b { (a, b) } else { (b, a) };
                *edge_w.entry(key).or_default() += 1;
            }
        }
    }
    let nodes = node_w
        .into_iter()
        .map(|(id, weight)| TopicNode {
            id,
            label: lexicon
                .name(id)
                .map(str::to_string)
                .unwrap_or_else(|| id.to_string()),
            weight,
        })
        .collect();
    let mut edges: Vec<Edge> = edge_w
        .into_iter()
        .map(|((u, v), weight)| Edge { u, v, weight })
        .collect();
    edges.sort();
    TopicGraph { nodes, edges }
}

/// Drops light nodes (with their edges), then light edges. Isolated nodes
/// that survive the node threshold are kept.
pub fn filter_graph(g: &TopicGraph, min_node_weight: u32, min_edge_weight: u32) -> TopicGraph {
    let nodes: Vec<TopicNode> = g
        .nodes
        .iter()
        .filter(|n| n.weight >= min_node_weight)
        .cloned()
        .collect();
    let keep = |id: TopicId| nodes.binary_search_by_key(&id, |n| n.id).is_ok();
    let edges = g
        .edges
        .iter()
        .filter(|e| e.weight >= min_edge_weight && keep(e.u) && keep(e.v))
        .copied()
        .collect();
    TopicGraph { nodes, edges }
}
