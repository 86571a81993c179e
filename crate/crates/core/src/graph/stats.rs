use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::TopicGraph;
use crate::ingest::Corpus;
use crate::TopicId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GiantComponent {
    pub nodes: usize,
    pub edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragePath {
    pub length: f64,
    /// `false` when every reachable pair was measured.
    pub sampled: bool,
    pub pairs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedTopic {
    pub id: TopicId,
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub node_count: usize,
    pub edge_count: usize,
    pub component_count: usize,
    pub component_sizes: Vec<usize>,
    pub giant_component: GiantComponent,
    /// degree -> number of nodes with that degree
    pub degree_distribution: BTreeMap<usize, usize>,
    pub triangles: u64,
    pub connected_triples: u64,
    pub global_clustering_coefficient: f64,
    /// Absent for graphs without edges.
    pub average_shortest_path: Option<AveragePath>,
    pub top_by_degree: Vec<RankedTopic>,
    pub top_by_weight: Vec<RankedTopic>,
    /// Empty when no corpus was supplied.
    pub top_by_citations_per_person: Vec<RankedTopic>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatsConfig {
    /// Largest node count for which all-pairs BFS is used.
    pub exact_path_limit: usize,
    pub sample_pairs: usize,
    pub seed: u64,
    pub top: usize,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            exact_path_limit: 2000,
            sample_pairs: 10_000,
            seed: 0,
            top: 10,
        }
    }
}

/// Network statistics with default settings.
pub fn compute_stats(g: &TopicGraph, corpus: Option<&Corpus>) -> GraphStats {
    compute_stats_with(g, corpus, &StatsConfig::default())
}

pub fn compute_stats_with(
    g: &TopicGraph,
    corpus: Option<&Corpus>,
    cfg: &StatsConfig,
) -> GraphStats {
    let n = g.node_count();
    let adj: Vec<Vec<usize>> = g
        .adjacency()
        .into_iter()
        .map(|l| l.into_iter().map(|(j, _)| j).collect())
        .collect();

    let comp = components(&adj);
    let mut sizes = vec![0usize; comp.count];
    for &c in &comp.label {
        sizes[c] += 1;
    }
    let giant = (0..comp.count).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)));
    let giant_edges = giant.map_or(0, |gc| {
        g.indexed_edges()
            .iter()
            .filter(|&&(a, _, _)| comp.label[a] == gc)
            .count()
    });
    let mut component_sizes = sizes.clone();
    component_sizes.sort_unstable_by(|a, b| b.cmp(a));

    let mut degree_distribution = BTreeMap::new();
    for list in &adj {
        *degree_distribution.entry(list.len()).or_insert(0) += 1;
    }

    let triangles = count_triangles(&adj);
    let connected_triples: u64 = adj
        .iter()
        .map(|l| (l.len() as u64) * (l.len() as u64).saturating_sub(1) / 2)
        .sum();
    let global_clustering_coefficient = if connected_triples == 0 {
        0.0
    } else {
        (3 * triangles) as f64 / connected_triples as f64
    };

    let average_shortest_path = if g.edge_count() == 0 {
        None
    } else if n <= cfg.exact_path_limit {
        Some(exact_average_path(&adj))
    } else {
        Some(sampled_average_path(&adj, &comp.label, &sizes, cfg))
    };

    let ranked = |value: &dyn Fn(usize) -> Option<f64>| -> Vec<RankedTopic> {
        let mut v: Vec<(usize, f64)> = (0..n).filter_map(|i| value(i).map(|x| (i, x))).collect();
        v.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then(g.nodes()[a.0].id.cmp(&g.nodes()[b.0].id))
        });
        v.truncate(cfg.top);
        v.into_iter()
            .map(|(i, value)| RankedTopic {
                id: g.nodes()[i].id,
                label: g.nodes()[i].label.clone(),
                value,
            })
            .collect()
    };
    let top_by_degree = ranked(&|i| Some(adj[i].len() as f64));
    let top_by_weight = ranked(&|i| Some(g.nodes()[i].weight as f64));
    let top_by_citations_per_person = match corpus {
        None => Vec::new(),
        Some(c) => {
            let mut cites = vec![0u64; n];
            for p in c.profiles() {
                for &t in &p.topics {
                    if let Some(i) = g.index_of(t) {
                        cites[i] += p.total_citations;
                    }
                }
            }
            ranked(&|i| {
                let w = g.nodes()[i].weight;
                (w > 0).then(|| cites[i] as f64 / w as f64)
            })
        }
    };

    GraphStats {
        node_count: n,
        edge_count: g.edge_count(),
        component_count: comp.count,
        component_sizes,
        giant_component: GiantComponent {
            nodes: giant.map_or(0, |gc| sizes[gc]),
            edges: giant_edges,
        },
        degree_distribution,
        triangles,
        connected_triples,
        global_clustering_coefficient,
        average_shortest_path,
        top_by_degree,
        top_by_weight,
        top_by_citations_per_person,
    }
}

struct Components {
    label: Vec<usize>,
    count: usize,
}

fn components(adj: &[Vec<usize>]) -> Components {
    let mut label = vec![usize::MAX; adj.len()];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for s in 0..adj.len() {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = count;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if label[v] == usize::MAX {
                    label[v] = count;
                    queue.push_back(v);
                }
            }
        }
        count += 1;
    }
    Components { label, count }
}

/// Each triangle counted once: for u < v < w via sorted-list intersection.
fn count_triangles(adj: &[Vec<usize>]) -> u64 {
    (0..adj.len())
        .into_par_iter()
        .map(|u| {
            let mut t = 0u64;
            let higher: Vec<usize> = adj[u].iter().copied().filter(|&v| v > u).collect();
            for (k, &v) in higher.iter().enumerate() {
                let (mut i, mut j) = (k + 1, 0);
                let nv = &adj[v];
                while i < higher.len() && j < nv.len() {
                    match higher[i].cmp(&nv[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            t += 1;
                            i += 1;
                            j += 1;
                        }
                    }
                }
            }
            t
        })
        .sum()
}

fn bfs(adj: &[Vec<usize>], s: usize, dist: &mut [u32]) {
    dist.fill(u32::MAX);
    dist[s] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v] == u32::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
}

/// Mean distance over all unordered reachable pairs.
fn exact_average_path(adj: &[Vec<usize>]) -> AveragePath {
    let n = adj.len();
    let (sum, pairs) = (0..n)
        .into_par_iter()
        .map_init(
            || vec![0u32; n],
            |dist, s| {
                bfs(adj, s, dist);
                let mut sum = 0u64;
                let mut pairs = 0u64;
                for &d in &dist[s + 1..] {
                    if d != u32::MAX {
                        sum += d as u64;
                        pairs += 1;
                    }
                }
                (sum, pairs)
            },
        )
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    AveragePath {
        length: sum as f64 / pairs as f64,
        sampled: false,
        pairs,
    }
}

/// Distances of uniformly sampled distinct pairs inside the giant component.
fn sampled_average_path(
    adj: &[Vec<usize>],
    label: &[usize],
    sizes: &[usize],
    cfg: &StatsConfig,
) -> AveragePath {
    let giant = (0..sizes.len())
        .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
        .unwrap();
    let members: Vec<usize> = (0..adj.len()).filter(|&i| label[i] == giant).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pairs: Vec<(usize, usize)> = (0..cfg.sample_pairs)
        .map(|_| {
            let a = rng.random_range(0..members.len());
            let mut b = rng.random_range(0..members.len() - 1);
            if b >= a {
                b += 1;
            }
            (members[a], members[b])
        })
        .collect();
    let sum: u64 = pairs
        .par_iter()
        .map_init(
            || vec![0u32; adj.len()],
            |dist, &(a, b)| {
                bfs(adj, a, dist);
                dist[b] as u64
            },
        )
        .sum();
    AveragePath {
        length: sum as f64 / pairs.len() as f64,
        sampled: true,
        pairs: pairs.len() as u64,
    }
}
