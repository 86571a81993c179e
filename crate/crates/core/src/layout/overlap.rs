//! Proximity-preserving node-overlap removal.
//!
//! Each round triangulates the node centers and adds every overlapping pair
//! found by a sweep. Overlapping pairs ask for the smallest stretch that
//! separates their boxes (capped per round), the other triangulation edges
//! keep their current length, and a stress model is relaxed toward those
//! lengths. A pairwise push, and as a last resort a uniform scale-up, finish
//! off whatever the stress rounds leave behind.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use spade::{DelaunayTriangulation, Point2, Triangulation};

use super::{Embedding, LayoutError};
use crate::geom::{Point, Size};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OverlapConfig {
    /// Stress rounds before falling back to the pairwise push.
    pub max_rounds: usize,
    /// Majorization steps per round.
    pub sweeps: usize,
    /// Upper bound on the per-round stretch of one edge.
    pub max_stretch: f64,
    pub max_push_iterations: usize,
    /// Scale the layout up when the push leaves overlaps.
    pub scale_fallback: bool,
}

impl Default for OverlapConfig {
    fn default() -> Self {
        OverlapConfig {
            max_rounds: 100,
            sweeps: 3,
            max_stretch: 1.5,
            max_push_iterations: 200,
            scale_fallback: true,
        }
    }
}

/// All pairs `(i, j)`, `i < j`, whose boxes overlap, in ascending order.
pub fn find_overlaps(e: &Embedding) -> Vec<(usize, usize)> {
    overlapping_pairs(&e.positions, &e.sizes)
}

fn overlapping_pairs(pos: &[Point], sizes: &[Size]) -> Vec<(usize, usize)> {
    let n = pos.len();
    let mut order: Vec<usize> = (0..n)
        .filter(|&i| sizes[i].width > 0.0 && sizes[i].height > 0.0)
        .collect();
    let lo = |i: usize| pos[i].x - sizes[i].width / 2.0;
    order.sort_by(|&a, &b| lo(a).total_cmp(&lo(b)).then(a.cmp(&b)));
    let mut out = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        let hi = pos[i].x + sizes[i].width / 2.0;
        for &j in &order[k + 1..] {
            if lo(j) >= hi {
                break;
            }
            if crate::geom::boxes_overlap(pos[i], sizes[i], pos[j], sizes[j]) {
                out.push((i.min(j), i.max(j)));
            }
        }
    }
    out.sort_unstable();
    out
}

/// Moves nodes until no two label boxes overlap. Overlap-free input is
/// returned unchanged.
pub fn remove_overlaps(e: &Embedding, cfg: &OverlapConfig) -> Result<Embedding, LayoutError> {
    if find_overlaps(e).is_empty() {
        return Ok(e.clone());
    }
    let sizes = &e.sizes;
    let mut pos = e.positions.clone();
    separate_coincident(&mut pos, sizes);

    for _ in 0..cfg.max_rounds {
        let remaining = overlapping_pairs(&pos, sizes);
        if remaining.is_empty() {
            return Ok(Embedding {
                positions: pos,
                ..e.clone()
            });
        }
        let mut targets = triangulation_edges(&pos)?;
        targets.extend(remaining);
        targets.sort_unstable();
        targets.dedup();
        relax(&mut pos, sizes, &targets, cfg);
        separate_coincident(&mut pos, sizes);
    }

    push_apart(&mut pos, sizes, cfg)?;
    Ok(Embedding {
        positions: pos,
        ..e.clone()
    })
}

/// Smallest factor by which the center distance must grow (along the current
/// direction) so the boxes stop overlapping; 1 when they already miss.
fn stretch(a: Point, sa: Size, b: Point, sb: Size) -> f64 {
    let dx = (a.x - b.x).abs();
    let dy = (a.y - b.y).abs();
    let tx = if dx > 0.0 {
        (sa.width + sb.width) / (2.0 * dx)
    } else {
        f64::INFINITY
    };
    let ty = if dy > 0.0 {
        (sa.height + sb.height) / (2.0 * dy)
    } else {
        f64::INFINITY
    };
    tx.min(ty).max(1.0)
}

fn triangulation_edges(pos: &[Point]) -> Result<Vec<(usize, usize)>, LayoutError> {
    if pos.len() < 2 {
        return Ok(Vec::new());
    }
    let pts: Vec<Point2<f64>> = pos.iter().map(|p| Point2::new(p.x, p.y)).collect();
    let dt = DelaunayTriangulation::<Point2<f64>>::bulk_load_stable(pts)
        .map_err(|err| LayoutError::Triangulation(format!("{err:?}")))?;
    if dt.num_vertices() != pos.len() {
        return Err(LayoutError::Triangulation(
            "duplicate node positions".into(),
        ));
    }
    let mut out: Vec<(usize, usize)> = dt
        .undirected_edges()
        .map(|edge| {
            let [a, b] = edge.vertices();
            let (a, b) = (a.fix().index(), b.fix().index());
            (a.min(b), a.max(b))
        })
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// Stress majorization over the target edges with weights `1 / d^2`. Each
/// step solves the weighted Laplacian system by preconditioned conjugate
/// gradients.
fn relax(pos: &mut [Point], sizes: &[Size], edges: &[(usize, usize)], cfg: &OverlapConfig) {
    let n = pos.len();
    let mut adj: Vec<Vec<(usize, f64, f64)>> = vec![Vec::new(); n];
    for &(i, j) in edges {
        let d0 = pos[i].dist(pos[j]);
        let s = stretch(pos[i], sizes[i], pos[j], sizes[j]);
        // aim slightly past touching so rounding does not leave slivers
        let t = if s > 1.0 {
            (s * 1.001).min(cfg.max_stretch)
        } else {
            1.0
        };
        let target = t * d0;
        if target > 0.0 {
            let w = 1.0 / (target * target);
            adj[i].push((j, target, w));
            adj[j].push((i, target, w));
        }
    }
    let diag: Vec<f64> = adj.iter().map(|a| a.iter().map(|e| e.2).sum()).collect();
    for _ in 0..cfg.sweeps {
        let mut bx = vec![0.0; n];
        let mut by = vec![0.0; n];
        for i in 0..n {
            for &(j, d, w) in &adj[i] {
                let (dx, dy) = (pos[i].x - pos[j].x, pos[i].y - pos[j].y);
                let len = dx.hypot(dy);
                if len > 0.0 {
                    bx[i] += w * d * dx / len;
                    by[i] += w * d * dy / len;
                }
            }
        }
        let mut x: Vec<f64> = pos.iter().map(|p| p.x).collect();
        let mut y: Vec<f64> = pos.iter().map(|p| p.y).collect();
        conjugate_gradient(&adj, &diag, &bx, &mut x);
        conjugate_gradient(&adj, &diag, &by, &mut y);
        for (p, (x, y)) in pos.iter_mut().zip(x.into_iter().zip(y)) {
            *p = Point::new(x, y);
        }
    }
}

/// Solves `L x = b` for the weighted graph Laplacian `L`, starting from `x`.
fn conjugate_gradient(adj: &[Vec<(usize, f64, f64)>], diag: &[f64], b: &[f64], x: &mut [f64]) {
    let n = x.len();
    let apply = |v: &[f64], out: &mut [f64]| {
        for i in 0..n {
            let mut s = diag[i] * v[i];
            for &(j, _, w) in &adj[i] {
                s -= w * v[j];
            }
            out[i] = s;
        }
    };
    let precond = |r: &[f64], z: &mut [f64]| {
        for i in 0..n {
            z[i] = if diag[i] > 0.0 { r[i] / diag[i] } else { 0.0 };
        }
    };
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let mut ap = vec![0.0; n];
    for _ in 0..n.clamp(10, 500) {
        if r.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-9 * b_norm {
            break;
        }
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precond(&r, &mut z);
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
}

/// Offsets nodes sharing a center so the triangulation sees distinct sites.
fn separate_coincident(pos: &mut [Point], sizes: &[Size]) {
    let mut seen: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    let unit = sizes
        .iter()
        .map(|s| s.height.max(s.width))
        .fold(0.0, f64::max)
        .max(1.0)
        * 1e-3;
    for (i, p) in pos.iter_mut().enumerate() {
        let mut k = 0;
        loop {
            let key = (p.x.to_bits(), p.y.to_bits());
            if let std::collections::btree_map::Entry::Vacant(e) = seen.entry(key) {
                e.insert(i);
                break;
            }
            k += 1;
            let a = (i as f64) * 2.399_963 + k as f64;
            *p = Point::new(
                p.x + unit * k as f64 * a.cos(),
                p.y + unit * k as f64 * a.sin(),
            );
        }
    }
}

/// Pairwise push along the axis of least penetration, one pair at a time,
/// followed by uniform scaling about the centroid if overlaps persist.
/// Scaling never creates an overlap, so it ends the process.
fn push_apart(pos: &mut [Point], sizes: &[Size], cfg: &OverlapConfig) -> Result<(), LayoutError> {
    let margin = sizes
        .iter()
        .map(|s| s.height.min(s.width))
        .filter(|&m| m > 0.0)
        .fold(f64::INFINITY, f64::min);
    let margin = if margin.is_finite() {
        margin * 1e-4
    } else {
        1e-9
    };
    for _ in 0..cfg.max_push_iterations {
        let pairs = overlapping_pairs(pos, sizes);
        if pairs.is_empty() {
            return Ok(());
        }
        for &(i, j) in &pairs {
            let (a, b) = (pos[i], pos[j]);
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let px = (sizes[i].width + sizes[j].width) / 2.0 - dx.abs();
            let py = (sizes[i].height + sizes[j].height) / 2.0 - dy.abs();
            if px <= 0.0 || py <= 0.0 {
                continue;
            }
            let sign = |d: f64| {
                if d > 0.0 {
                    1.0
                } else if d < 0.0 {
                    -1.0
                } else if (i + j) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            };
            if px <= py {
                let m = (px / 2.0 + margin) * sign(dx);
                pos[i].x -= m;
                pos[j].x += m;
            } else {
                let m = (py / 2.0 + margin) * sign(dy);
                pos[i].y -= m;
                pos[j].y += m;
            }
        }
    }
    for _ in 0..if cfg.scale_fallback { 8 } else { 0 } {
        let pairs = overlapping_pairs(pos, sizes);
        if pairs.is_empty() {
            return Ok(());
        }
        let factor = pairs
            .iter()
            .map(|&(i, j)| stretch(pos[i], sizes[i], pos[j], sizes[j]))
            .fold(1.0, f64::max)
            * (1.0 + 1e-9);
        if !factor.is_finite() {
            break;
        }
        tracing::debug!(
            factor,
            pairs = pairs.len(),
            "scaling layout to clear remaining overlaps"
        );
        let c = crate::geom::Rect::bounding(pos.iter().copied())
            .expect("non-empty")
            .center();
        for p in pos.iter_mut() {
            *p = Point::new(c.x + (p.x - c.x) * factor, c.y + (p.y - c.y) * factor);
        }
    }
    let pairs = overlapping_pairs(pos, sizes);
    if pairs.is_empty() {
        return Ok(());
    }
    let worst = pairs
        .iter()
        .map(|&(i, j)| {
            let px = (sizes[i].width + sizes[j].width) / 2.0 - (pos[i].x - pos[j].x).abs();
            let py = (sizes[i].height + sizes[j].height) / 2.0 - (pos[i].y - pos[j].y).abs();
            px.min(py)
        })
        .fold(0.0, f64::max);
    Err(LayoutError::OverlapNotConverged {
        iterations: cfg.max_rounds + cfg.max_push_iterations,
        worst_overlap: worst,
        remaining_pairs: pairs.len(),
    })
}
