//! Country polygons from a clipped Voronoi diagram of the node centers.
//!
//! Synthetic sites on a circle outside the clip box keep every node's cell
//! finite. Cells are clipped to the box and merged per cluster by cancelling
//! edges shared between cells of the same cluster; what remains is traced
//! into rings with the country on the left.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use spade::handles::FixedVertexHandle;
use spade::{DelaunayTriangulation, Point2, Triangulation};

use super::color::Rgb;
use super::{Country, CountryMap, Embedding, LayoutError};
use crate::geom::{Point, Rect};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CountryConfig {
    /// Clip box growth as a fraction of the label bounding box.
    pub padding: f64,
    pub boundary_sites: usize,
    /// Radius of the boundary-site circle in clip-box diagonals.
    pub boundary_radius: f64,
}

impl Default for CountryConfig {
    fn default() -> Self {
        CountryConfig {
            padding: 0.05,
            boundary_sites: 16,
            boundary_radius: 2.0,
        }
    }
}

type Key = (u64, u64);

fn key(p: Point) -> Key {
    (p.x.to_bits(), p.y.to_bits())
}

/// Builds one polygon set per cluster. `clusters[i]` must be `< k`.
pub fn build_countries(
    e: &Embedding,
    clusters: &[usize],
    k: usize,
    cfg: &CountryConfig,
) -> Result<CountryMap, LayoutError> {
    let n = e.len();
    if n == 0 {
        return Err(LayoutError::EmptyGraph);
    }
    if clusters.len() != n {
        return Err(LayoutError::ClusterMismatch {
            got: clusters.len(),
            expected: n,
        });
    }
    if let Some(&bad) = clusters.iter().find(|&&c| c >= k) {
        return Err(LayoutError::InvalidClusterCount { k, nodes: bad + 1 });
    }
    let bounds = e.bounds().expect("n > 0").inflate(cfg.padding, 1.0);
    let cells = voronoi_cells(&e.positions, bounds, cfg)?;

    let mut per_cluster: Vec<Vec<(Point, Point)>> = vec![Vec::new(); k];
    for (cell, &c) in cells.iter().zip(clusters) {
        let m = cell.len();
        for i in 0..m {
            let (a, b) = (cell[i], cell[(i + 1) % m]);
            if key(a) != key(b) {
                per_cluster[c].push((a, b));
            }
        }
    }
    let countries = per_cluster
        .into_iter()
        .enumerate()
        .map(|(cluster, edges)| Country {
            cluster,
            color: Rgb::default(),
            rings: trace_rings(cancel_shared(edges)),
        })
        .collect();
    Ok(CountryMap {
        cluster_of: clusters.to_vec(),
        countries,
        bounds,
    })
}

/// Clipped Voronoi cell of every point, counterclockwise.
fn voronoi_cells(
    points: &[Point],
    bounds: Rect,
    cfg: &CountryConfig,
) -> Result<Vec<Vec<Point>>, LayoutError> {
    let n = points.len();
    let center = bounds.center();
    let radius = cfg.boundary_radius * bounds.diagonal();
    let m = cfg.boundary_sites.max(3);
    let mut sites: Vec<Point2<f64>> = points.iter().map(|p| Point2::new(p.x, p.y)).collect();
    for s in 0..m {
        let a = std::f64::consts::TAU * s as f64 / m as f64;
        sites.push(Point2::new(
            center.x + radius * a.cos(),
            center.y + radius * a.sin(),
        ));
    }
    let total = sites.len();
    let dt = DelaunayTriangulation::<Point2<f64>>::bulk_load_stable(sites)
        .map_err(|err| LayoutError::Triangulation(format!("{err:?}")))?;
    if dt.num_vertices() != total {
        let mut seen = BTreeSet::new();
        for p in points {
            if !seen.insert(key(*p)) {
                return Err(LayoutError::CoincidentNodes { x: p.x, y: p.y });
            }
        }
        return Err(LayoutError::Triangulation(
            "site lost during triangulation".into(),
        ));
    }

    let mut centers: HashMap<usize, Point> = HashMap::new();
    let mut cells = Vec::with_capacity(n);
    for i in 0..n {
        let v = dt.vertex(FixedVertexHandle::from_index(i));
        let mut ring = Vec::new();
        for edge in v.out_edges() {
            let face = edge.face();
            let inner = face.as_inner().ok_or_else(|| {
                LayoutError::Triangulation("node on the hull of the site set".into())
            })?;
            let c = *centers.entry(inner.fix().index()).or_insert_with(|| {
                let cc = inner.circumcenter();
                Point::new(cc.x, cc.y)
            });
            if ring.last().is_none_or(|&l: &Point| key(l) != key(c)) {
                ring.push(c);
            }
        }
        if ring.len() > 1 && key(ring[0]) == key(*ring.last().expect("non-empty")) {
            ring.pop();
        }
        cells.push(clip(&ring, bounds));
    }
    Ok(cells)
}

#[derive(Clone, Copy)]
enum Side {
    Left(f64),
    Right(f64),
    Bottom(f64),
    Top(f64),
}

impl Side {
    fn inside(self, p: Point) -> bool {
        match self {
            Side::Left(c) => p.x >= c,
            Side::Right(c) => p.x <= c,
            Side::Bottom(c) => p.y >= c,
            Side::Top(c) => p.y <= c,
        }
    }

    /// Crossing of segment `ab` with the clip line. Endpoints are ordered
    /// first so both cells sharing the segment get bit-identical points.
    fn cross(self, a: Point, b: Point) -> Point {
        let (p, q) = if (a.x, a.y) <= (b.x, b.y) {
            (a, b)
        } else {
            (b, a)
        };
        match self {
            Side::Left(c) | Side::Right(c) => {
                let t = (c - p.x) / (q.x - p.x);
                Point::new(c, p.y + (q.y - p.y) * t)
            }
            Side::Bottom(c) | Side::Top(c) => {
                let t = (c - p.y) / (q.y - p.y);
                Point::new(p.x + (q.x - p.x) * t, c)
            }
        }
    }
}

/// Sutherland-Hodgman against the four sides of `r`.
fn clip(ring: &[Point], r: Rect) -> Vec<Point> {
    let mut out = ring.to_vec();
    for side in [
        Side::Left(r.min_x),
        Side::Right(r.max_x),
        Side::Bottom(r.min_y),
        Side::Top(r.max_y),
    ] {
        if out.is_empty() {
            break;
        }
        let input = std::mem::take(&mut out);
        let m = input.len();
        for i in 0..m {
            let cur = input[i];
            let prev = input[(i + m - 1) % m];
            match (side.inside(prev), side.inside(cur)) {
                (true, true) => out.push(cur),
                (true, false) => out.push(side.cross(prev, cur)),
                (false, true) => {
                    out.push(side.cross(prev, cur));
                    out.push(cur);
                }
                (false, false) => {}
            }
        }
        out.dedup_by(|a, b| key(*a) == key(*b));
        if out.len() > 1 && key(out[0]) == key(*out.last().expect("non-empty")) {
            out.pop();
        }
    }
    out
}

/// Drops every edge whose reverse is also present, pairing them one to one.
fn cancel_shared(edges: Vec<(Point, Point)>) -> Vec<(Point, Point)> {
    let mut count: BTreeMap<(Key, Key), (usize, Point, Point)> = BTreeMap::new();
    for (a, b) in edges {
        count.entry((key(a), key(b))).or_insert((0, a, b)).0 += 1;
    }
    let mut out = Vec::new();
    for (&(ka, kb), &(c, a, b)) in &count {
        let rev = count.get(&(kb, ka)).map_or(0, |r| r.0);
        for _ in rev..c {
            out.push((a, b));
        }
    }
    out
}

/// Links directed boundary edges into rings. At a vertex with several
/// continuations the sharpest left turn wins, which splits rings that only
/// touch at a point.
fn trace_rings(edges: Vec<(Point, Point)>) -> Vec<Vec<Point>> {
    let mut outgoing: BTreeMap<Key, Vec<usize>> = BTreeMap::new();
    for (i, (a, _)) in edges.iter().enumerate() {
        outgoing.entry(key(*a)).or_default().push(i);
    }
    let mut used = vec![false; edges.len()];
    let mut rings = Vec::new();
    let mut starts: Vec<usize> = (0..edges.len()).collect();
    starts.sort_by_key(|&i| (key(edges[i].0), key(edges[i].1)));
    for s in starts {
        if used[s] {
            continue;
        }
        used[s] = true;
        let mut ring = vec![edges[s].0];
        let mut cur = s;
        loop {
            let (a, b) = edges[cur];
            let din = (b.x - a.x, b.y - a.y);
            let mut best: Option<(f64, usize)> = None;
            for &j in outgoing.get(&key(b)).map(Vec::as_slice).unwrap_or(&[]) {
                if used[j] && j != s {
                    continue;
                }
                let c = edges[j].1;
                let dout = (c.x - b.x, c.y - b.y);
                let turn = (din.0 * dout.1 - din.1 * dout.0).atan2(din.0 * dout.0 + din.1 * dout.1);
                if best.is_none_or(|(t, _)| turn > t) {
                    best = Some((turn, j));
                }
            }
            match best {
                Some((_, j)) if j == s => break,
                Some((_, j)) => {
                    used[j] = true;
                    ring.push(edges[j].0);
                    cur = j;
                }
                None => break,
            }
        }
        if ring.len() >= 3 {
            rings.push(ring);
        }
    }
    rings
}

/// Pairs of clusters whose polygons share a boundary segment, ascending.
pub fn country_adjacency(rings: &[Vec<Vec<Point>>]) -> Vec<(usize, usize)> {
    let mut owner: HashMap<(Key, Key), usize> = HashMap::new();
    for (c, rs) in rings.iter().enumerate() {
        for r in rs {
            for i in 0..r.len() {
                owner.insert((key(r[i]), key(r[(i + 1) % r.len()])), c);
            }
        }
    }
    let mut out = BTreeSet::new();
    for (&(a, b), &c) in &owner {
        if let Some(&d) = owner.get(&(b, a)) {
            if c != d {
                out.insert((c.min(d), c.max(d)));
            }
        }
    }
    out.into_iter().collect()
}
