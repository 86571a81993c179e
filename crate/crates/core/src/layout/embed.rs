//! Multilevel spring-electrical embedding.
//!
//! Attraction between neighbours is `(1 + ln w) d^2 / K`, repulsion between
//! every pair is `C K^2 / d`. Graphs are coarsened by heaviest-edge matching,
//! laid out from the coarsest level down, and each connected component is
//! embedded on its own before the components are packed into rows.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::quadtree::{pair_repulsion, QuadTree};
use super::{Embedding, LayoutError};
use crate::geom::{Point, Size};
use crate::graph::TopicGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedConfig {
    /// Natural spring length of the output; two connected nodes alone settle
    /// at `repulsion^(1/3) * spring_length`.
    pub spring_length: f64,
    /// Relative repulsion strength `C`.
    pub repulsion: f64,
    /// Barnes-Hut opening angle.
    pub theta: f64,
    /// Components up to this size use exact pairwise repulsion.
    pub exact_repulsion_limit: usize,
    /// Coarsening stops at this many nodes.
    pub coarsest_size: usize,
    pub max_iterations: usize,
    /// Stop when the mean displacement per iteration falls below this
    /// fraction of `K`.
    pub tolerance: f64,
    /// Step decay factor of the adaptive cooling schedule.
    pub cooling: f64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            spring_length: 30.0,
            repulsion: 0.2,
            theta: 0.9,
            exact_repulsion_limit: 600,
            coarsest_size: 50,
            max_iterations: 300,
            tolerance: 1e-3,
            cooling: 0.9,
        }
    }
}

/// Embeds `g` in the plane. The result is centered on the origin and all
/// label boxes are zero-sized.
pub fn embed(g: &TopicGraph, cfg: &EmbedConfig, seed: u64) -> Result<Embedding, LayoutError> {
    let n = g.node_count();
    if n == 0 {
        return Err(LayoutError::EmptyGraph);
    }
    let adjacency = g.adjacency();
    let components = components(&adjacency);
    let scale = cfg.spring_length;

    let mut placed: Vec<(Vec<usize>, Vec<Point>)> = Vec::with_capacity(components.len());
    for (ci, comp) in components.into_iter().enumerate() {
        let local: BTreeMap<usize, usize> = comp.iter().enumerate().map(|(l, &v)| (v, l)).collect();
        let mut edges = Vec::new();
        for &v in &comp {
            for &(u, w) in &adjacency[v] {
                if v < u {
                    edges.push((local[&v], local[&u], w as f64));
                }
            }
        }
        let level = Level::new(comp.len(), edges);
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ (ci as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let pos = multilevel(level, cfg, &mut rng);
        let pos: Vec<Point> = pos
            .into_iter()
            .map(|p| Point::new(p.x * scale, p.y * scale))
            .collect();
        placed.push((comp, pos));
    }

    let positions = pack(placed, n, scale);
    Ok(Embedding {
        ids: g.nodes().iter().map(|node| node.id).collect(),
        positions,
        sizes: vec![
            Size {
                width: 0.0,
                height: 0.0
            };
            n
        ],
    })
}

/// Connected components in order of decreasing size, ties by smallest member.
fn components(adjacency: &[Vec<(usize, u32)>]) -> Vec<Vec<usize>> {
    let n = adjacency.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut head = 0;
        while head < comp.len() {
            let v = comp[head];
            head += 1;
            for &(u, _) in &adjacency[v] {
                if !seen[u] {
                    seen[u] = true;
                    comp.push(u);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    out
}

struct Level {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl Level {
    fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(u, v, w) in &edges {
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        Level { n, edges, adj }
    }

    /// Heaviest-edge matching. Returns the coarse level and the fine-to-coarse map.
    fn coarsen(&self) -> (Level, Vec<usize>) {
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by_key(|&v| (self.adj[v].len(), v));
        let mut mate = vec![usize::MAX; self.n];
        for &v in &order {
            if mate[v] != usize::MAX {
                continue;
            }
            let best = self.adj[v]
                .iter()
                .filter(|&&(u, _)| mate[u] == usize::MAX && u != v)
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
            match best {
                Some(&(u, _)) => {
                    mate[v] = u;
                    mate[u] = v;
                }
                None => mate[v] = v,
            }
        }
        let mut map = vec![usize::MAX; self.n];
        let mut next = 0;
        for v in 0..self.n {
            if map[v] == usize::MAX {
                map[v] = next;
                map[mate[v]] = next;
                next += 1;
            }
        }
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(u, v, w) in &self.edges {
            let (a, b) = (map[u], map[v]);
            if a != b {
                *merged.entry((a.min(b), a.max(b))).or_default() += w;
            }
        }
        let edges = merged.into_iter().map(|((a, b), w)| (a, b, w)).collect();
        (Level::new(next, edges), map)
    }
}

fn multilevel(finest: Level, cfg: &EmbedConfig, rng: &mut ChaCha8Rng) -> Vec<Point> {
    if finest.n == 1 {
        return vec![Point::new(0.0, 0.0)];
    }
    let mut levels = vec![finest];
    let mut maps: Vec<Vec<usize>> = Vec::new();
    while levels
        .last()
        .is_some_and(|l| l.n > cfg.coarsest_size.max(2))
    {
        let (coarse, map) = levels.last().expect("non-empty").coarsen();
        let fine_n = levels.last().expect("non-empty").n;
        if coarse.n as f64 > 0.8 * fine_n as f64 {
            break;
        }
        levels.push(coarse);
        maps.push(map);
    }

    let ratio = (7.0f64 / 4.0).sqrt();
    let depth = levels.len() - 1;
    let mut k = ratio.powi(depth as i32);
    let coarsest = &levels[depth];
    let side = (coarsest.n as f64).sqrt() * k;
    let mut pos: Vec<Point> = (0..coarsest.n)
        .map(|_| Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side))
        .collect();
    relax(coarsest, &mut pos, k, k, cfg);

    for lvl in (0..depth).rev() {
        k /= ratio;
        let map = &maps[lvl];
        let fine = &levels[lvl];
        pos = (0..fine.n)
            .map(|v| {
                let p = pos[map[v]];
                let a = rng.random::<f64>() * std::f64::consts::TAU;
                Point::new(p.x + 0.1 * k * a.cos(), p.y + 0.1 * k * a.sin())
            })
            .collect();
        relax(fine, &mut pos, k, 0.5 * k, cfg);
    }
    pos
}

/// Force-directed relaxation with simultaneous updates and the adaptive
/// step schedule: the step grows after five consecutive energy decreases
/// and shrinks whenever the energy does not decrease.
fn relax(level: &Level, pos: &mut [Point], k: f64, initial_step: f64, cfg: &EmbedConfig) {
    let n = level.n;
    let strength = cfg.repulsion * k * k;
    let mut step = initial_step;
    let mut energy_prev = f64::INFINITY;
    let mut progress = 0;
    for _ in 0..cfg.max_iterations {
        let snapshot: Vec<Point> = pos.to_vec();
        let tree = (n > cfg.exact_repulsion_limit).then(|| QuadTree::build(&snapshot));
        let forces: Vec<(f64, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let p = snapshot[i];
                let (mut fx, mut fy) = match &tree {
                    Some(t) => t.repulsion(i, strength, cfg.theta),
                    None => (0..n).filter(|&j| j != i).fold((0.0, 0.0), |(ax, ay), j| {
                        let (dx, dy) = pair_repulsion(i, j, p, snapshot[j], strength);
                        (ax + dx, ay + dy)
                    }),
                };
                for &(j, w) in &level.adj[i] {
                    let q = snapshot[j];
                    let (dx, dy) = (q.x - p.x, q.y - p.y);
                    let d = dx.hypot(dy);
                    let f = (1.0 + w.ln()) * d / k;
                    fx += f * dx;
                    fy += f * dy;
                }
                (fx, fy)
            })
            .collect();

        let mut energy = 0.0;
        let mut moved = 0.0;
        for (p, &(fx, fy)) in pos.iter_mut().zip(&forces) {
            let norm = fx.hypot(fy);
            energy += norm * norm;
            if norm > 0.0 {
                let s = step.min(norm.max(step * 1e-3));
                p.x += s * fx / norm;
                p.y += s * fy / norm;
                moved += s;
            }
        }

        if energy < energy_prev {
            progress += 1;
            if progress >= 5 {
                progress = 0;
                step /= cfg.cooling;
            }
        } else {
            progress = 0;
            step *= cfg.cooling;
        }
        energy_prev = energy;
        if moved / (n as f64) < cfg.tolerance * k {
            break;
        }
    }
}

/// Shelf-packs component layouts left to right, then centers the result.
fn pack(placed: Vec<(Vec<usize>, Vec<Point>)>, n: usize, gap: f64) -> Vec<Point> {
    let mut boxes = Vec::with_capacity(placed.len());
    for (_, pos) in &placed {
        let r = crate::geom::Rect::bounding(pos.iter().copied()).expect("component is non-empty");
        boxes.push(r);
    }
    let total: f64 = boxes
        .iter()
        .map(|r| (r.width() + gap) * (r.height() + gap))
        .sum();
    let row_width = total
        .sqrt()
        .max(boxes.iter().map(|r| r.width()).fold(0.0, f64::max));

    let mut out = vec![Point::default(); n];
    let (mut x, mut y, mut shelf) = (0.0, 0.0, 0.0f64);
    for ((comp, pos), r) in placed.iter().zip(&boxes) {
        if x > 0.0 && x + r.width() > row_width {
            x = 0.0;
            y -= shelf + gap;
            shelf = 0.0;
        }
        for (&v, p) in comp.iter().zip(pos) {
            out[v] = Point::new(p.x - r.min_x + x, p.y - r.max_y + y);
        }
        x += r.width() + gap;
        shelf = shelf.max(r.height());
    }

    let b = crate::geom::Rect::bounding(out.iter().copied()).expect("n > 0");
    let c = b.center();
    for p in &mut out {
        p.x -= c.x;
        p.y -= c.y;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::test_graph as graph;

    #[test]
    fn single_node_sits_at_origin() {
        let e = embed(&graph(1, &[]), &EmbedConfig::default(), 3).unwrap();
        assert_eq!(e.positions, vec![Point::new(0.0, 0.0)]);
    }

    #[test]
    fn empty_graph_is_an_error() {
        assert!(matches!(
            embed(&graph(0, &[]), &EmbedConfig::default(), 0),
            Err(LayoutError::EmptyGraph)
        ));
    }

    #[test]
    fn two_bodies_settle_at_closed_form_distance() {
        let cfg = EmbedConfig {
            max_iterations: 2000,
            tolerance: 1e-7,
            ..EmbedConfig::default()
        };
        let e = embed(&graph(2, &[(0, 1, 1)]), &cfg, 11).unwrap();
        let d = e.positions[0].dist(e.positions[1]);
        let expected = cfg.repulsion.cbrt() * cfg.spring_length;
        assert!(
            (d - expected).abs() / expected < 1e-3,
            "distance {d}, expected {expected}"
        );
    }

    #[test]
    fn k5_is_radially_symmetric() {
        let mut edges = Vec::new();
        for u in 0..5 {
            for v in u + 1..5 {
                edges.push((u, v, 1));
            }
        }
        let e = embed(&graph(5, &edges), &EmbedConfig::default(), 5).unwrap();
        let cx = e.positions.iter().map(|p| p.x).sum::<f64>() / 5.0;
        let cy = e.positions.iter().map(|p| p.y).sum::<f64>() / 5.0;
        let radii: Vec<f64> = e
            .positions
            .iter()
            .map(|p| p.dist(Point::new(cx, cy)))
            .collect();
        let (lo, hi) = radii
            .iter()
            .fold((f64::MAX, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
        assert!(hi / lo < 1.25, "radii {radii:?}");
        for i in 0..5 {
            for j in i + 1..5 {
                assert!(e.positions[i].dist(e.positions[j]) > 0.1 * cfg_len());
            }
        }
    }

    fn cfg_len() -> f64 {
        EmbedConfig::default().spring_length
    }

    #[test]
    fn same_seed_same_layout() {
        let edges: Vec<(u32, u32, u32)> = (0..300)
            .map(|i| (i % 120, (i * 7 + 3) % 120, 1 + i % 4))
            .filter(|e| e.0 != e.1)
            .collect();
        let g = graph(130, &edges);
        let a = embed(&g, &EmbedConfig::default(), 42).unwrap();
        let b = embed(&g, &EmbedConfig::default(), 42).unwrap();
        assert_eq!(a, b);
        let c = embed(&g, &EmbedConfig::default(), 43).unwrap();
        assert_ne!(a.positions, c.positions);
    }

    #[test]
    fn neighbours_end_up_closer_than_strangers() {
        // two dense clusters joined by one edge
        let mut edges = Vec::new();
        for base in [0u32, 20] {
            for u in 0..20 {
                for v in u + 1..20 {
                    if (u * 7 + v) % 3 == 0 {
                        edges.push((base + u, base + v, 1));
                    }
                }
            }
        }
        edges.push((0, 20, 1));
        let g = graph(40, &edges);
        let e = embed(&g, &EmbedConfig::default(), 1).unwrap();
        let mean = |a: std::ops::Range<usize>, b: std::ops::Range<usize>| {
            let mut s = 0.0;
            let mut c = 0.0;
            for i in a.clone() {
                for j in b.clone() {
                    if i != j {
                        s += e.positions[i].dist(e.positions[j]);
                        c += 1.0;
                    }
                }
            }
            s / c
        };
        assert!(mean(0..20, 0..20) < mean(0..20, 20..40));
        assert!(mean(20..40, 20..40) < mean(0..20, 20..40));
    }

    #[test]
    fn components_do_not_share_positions() {
        let g = graph(6, &[(0, 1, 1), (2, 3, 1)]);
        let e = embed(&g, &EmbedConfig::default(), 9).unwrap();
        for i in 0..6 {
            for j in i + 1..6 {
                assert!(e.positions[i].dist(e.positions[j]) > 1e-6);
            }
        }
        let b = crate::geom::Rect::bounding(e.positions.iter().copied()).unwrap();
        assert!(b.center().dist(Point::new(0.0, 0.0)) < 1e-9);
    }

    #[test]
    fn large_graph_uses_approximate_repulsion_and_finishes() {
        let n = 1500u32;
        let edges: Vec<(u32, u32, u32)> = (0..n * 3)
            .map(|i| (i % n, (i.wrapping_mul(2_654_435_761) >> 7) % n, 1))
            .filter(|e| e.0 != e.1)
            .collect();
        let g = graph(n, &edges);
        let e = embed(&g, &EmbedConfig::default(), 2).unwrap();
        assert!(e
            .positions
            .iter()
            .all(|p| p.x.is_finite() && p.y.is_finite()));
    }
}
