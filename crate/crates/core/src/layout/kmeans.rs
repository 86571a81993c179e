//! k-means on node positions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LayoutError;
use crate::geom::Point;

const MAX_LLOYD_ITERATIONS: usize = 100;
const MAX_REFINE_PASSES: usize = 1000;

/// Assigns each point to one of `k` clusters.
///
/// Seeding picks the first center at random and each further center as the
/// point farthest from those already chosen. Lloyd iterations run to a fixpoint
/// (at most 100), then single-point moves that lower the objective are applied
/// until none remain. Cluster ids are renumbered by their smallest member.
pub fn cluster_nodes(points: &[Point], k: usize, seed: u64) -> Result<Vec<usize>, LayoutError> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(LayoutError::InvalidClusterCount { k, nodes: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..n)]);
    let mut nearest: Vec<f64> = points.iter().map(|p| p.dist2(centers[0])).collect();
    while centers.len() < k {
        let far = argmax(&nearest);
        let c = points[far];
        centers.push(c);
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(p.dist2(c));
        }
    }

    let mut assign = vec![usize::MAX; n];
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let best = nearest_center(*p, &centers);
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        centers = centroids(points, &assign, k, &centers);
        reseed_empty(points, &mut assign, &mut centers, k);
        if !changed {
            break;
        }
    }

    refine(points, &mut assign, k);
    Ok(renumber(&assign, k))
}

/// Sum over points of the squared distance to their cluster centroid.
pub fn within_cluster_sum_of_squares(points: &[Point], assign: &[usize], k: usize) -> f64 {
    let centers = centroids(points, assign, k, &vec![Point::default(); k]);
    points
        .iter()
        .zip(assign)
        .map(|(p, &c)| p.dist2(centers[c]))
        .sum()
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn nearest_center(p: Point, centers: &[Point]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, &q) in centers.iter().enumerate() {
        let d = p.dist2(q);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn centroids(points: &[Point], assign: &[usize], k: usize, fallback: &[Point]) -> Vec<Point> {
    let mut sum = vec![(0.0, 0.0, 0usize); k];
    for (p, &c) in points.iter().zip(assign) {
        sum[c].0 += p.x;
        sum[c].1 += p.y;
        sum[c].2 += 1;
    }
    sum.iter()
        .zip(fallback)
        .map(|(&(x, y, m), &f)| {
            if m == 0 {
                f
            } else {
                Point::new(x / m as f64, y / m as f64)
            }
        })
        .collect()
}

/// Gives each empty cluster the point farthest from its own centroid.
fn reseed_empty(points: &[Point], assign: &mut [usize], centers: &mut [Point], k: usize) {
    loop {
        let mut sizes = vec![0usize; k];
        for &c in assign.iter() {
            sizes[c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let dist: Vec<f64> = points
            .iter()
            .zip(assign.iter())
            .map(|(p, &c)| {
                if sizes[c] > 1 {
                    p.dist2(centers[c])
                } else {
                    -1.0
                }
            })
            .collect();
        let far = argmax(&dist);
        let old = assign[far];
        assign[far] = empty;
        centers[empty] = points[far];
        centers[old] = centroids(points, assign, k, centers)[old];
    }
}

/// Hartigan-style single-point moves. Moving `x` from `a` to `b` changes the
/// objective by `n_b/(n_b+1)|x-c_b|^2 - n_a/(n_a-1)|x-c_a|^2`.
fn refine(points: &[Point], assign: &mut [usize], k: usize) {
    let mut counts = vec![0usize; k];
    for &c in assign.iter() {
        counts[c] += 1;
    }
    let mut centers = centroids(points, assign, k, &vec![Point::default(); k]);
    let scale = points
        .iter()
        .map(|p| p.x.abs().max(p.y.abs()))
        .fold(0.0, f64::max)
        .max(1.0);
    let eps = 1e-12 * scale * scale;
    for _ in 0..MAX_REFINE_PASSES {
        let mut moved = false;
        for (i, &p) in points.iter().enumerate() {
            let a = assign[i];
            if counts[a] <= 1 {
                continue;
            }
            let na = counts[a] as f64;
            let remove = na / (na - 1.0) * p.dist2(centers[a]);
            let mut best = None;
            let mut best_cost = remove - eps;
            for b in 0..k {
                if b == a {
                    continue;
                }
                let nb = counts[b] as f64;
                let add = nb / (nb + 1.0) * p.dist2(centers[b]);
                if add < best_cost {
                    best_cost = add;
                    best = Some(b);
                }
            }
            if let Some(b) = best {
                let nb = counts[b] as f64;
                centers[a] = Point::new(
                    (centers[a].x * na - p.x) / (na - 1.0),
                    (centers[a].y * na - p.y) / (na - 1.0),
                );
                centers[b] = Point::new(
                    (centers[b].x * nb + p.x) / (nb + 1.0),
                    (centers[b].y * nb + p.y) / (nb + 1.0),
                );
                counts[a] -= 1;
                counts[b] += 1;
                assign[i] = b;
                moved = true;
            }
        }
        if !moved {
            break;
        }
        // drop accumulated rounding before the next pass
        centers = centroids(points, assign, k, &centers);
    }
}

fn renumber(assign: &[usize], k: usize) -> Vec<usize> {
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    for &c in assign {
        if map[c] == usize::MAX {
            map[c] = next;
            next += 1;
        }
    }
    assign.iter().map(|&c| map[c]).collect()
}
