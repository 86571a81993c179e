//! Barnes-Hut quadtree for far-field repulsion.

use crate::geom::Point;

const LEAF_CAPACITY: usize = 8;
const MAX_DEPTH: usize = 32;
const NONE: u32 = u32::MAX;

struct Cell {
    width: f64,
    mass: f64,
    center_of_mass: Point,
    children: [u32; 4],
    /// range into `QuadTree::order` for leaves
    start: u32,
    end: u32,
}

pub(crate) struct QuadTree<'a> {
    points: &'a [Point],
    cells: Vec<Cell>,
    order: Vec<u32>,
}

impl<'a> QuadTree<'a> {
    pub(crate) fn build(points: &'a [Point]) -> Self {
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let (mut min_x, mut min_y, mut max_x, mut max_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for p in points {
            min_x = min_x.min(p.x);
            min_y = min_y.min(p.y);
            max_x = max_x.max(p.x);
            max_y = max_y.max(p.y);
        }
        let width = (max_x - min_x).max(max_y - min_y).max(1e-9);
        let mut tree = QuadTree {
            points,
            cells: Vec::new(),
            order: Vec::new(),
        };
        let n = order.len();
        tree.build_cell(&mut order, 0, n, min_x, min_y, width, 0);
        tree.order = order;
        tree
    }

    #[allow(clippy::too_many_arguments)]
    fn build_cell(
        &mut self,
        order: &mut [u32],
        start: usize,
        end: usize,
        x0: f64,
        y0: f64,
        width: f64,
        depth: usize,
    ) -> u32 {
        let id = self.cells.len() as u32;
        let slice = &order[start..end];
        let mass = slice.len() as f64;
        let (sx, sy) = slice.iter().fold((0.0, 0.0), |(sx, sy), &i| {
            let p = self.points[i as usize];
            (sx + p.x, sy + p.y)
        });
        self.cells.push(Cell {
            width,
            mass,
            center_of_mass: Point::new(sx / mass, sy / mass),
            children: [NONE; 4],
            start: start as u32,
            end: end as u32,
        });
        if end - start <= LEAF_CAPACITY || depth >= MAX_DEPTH {
            return id;
        }
        let half = width / 2.0;
        let (mx, my) = (x0 + half, y0 + half);
        let quadrant = |p: Point| (usize::from(p.x >= mx)) | (usize::from(p.y >= my) << 1);
        let slice = &mut order[start..end];
        slice.sort_by_key(|&i| quadrant(self.points[i as usize]));
        let mut bounds = [start; 5];
        for q in 0..4 {
            bounds[q + 1] = bounds[q]
                + slice
                    .iter()
                    .filter(|&&i| quadrant(self.points[i as usize]) == q)
                    .count();
        }
        for q in 0..4 {
            if bounds[q] < bounds[q + 1] {
                let cx = if q & 1 == 1 { mx } else { x0 };
                let cy = if q & 2 == 2 { my } else { y0 };
                let child =
                    self.build_cell(order, bounds[q], bounds[q + 1], cx, cy, half, depth + 1);
                self.cells[id as usize].children[q] = child;
            }
        }
        id
    }

    /// Sum of `strength * (p_i - p_j) / |p_i - p_j|^2` over all other points,
    /// approximating distant cells by their center of mass.
    pub(crate) fn repulsion(&self, i: usize, strength: f64, theta: f64) -> (f64, f64) {
        let p = self.points[i];
        let (mut fx, mut fy) = (0.0, 0.0);
        let mut stack = vec![0u32];
        while let Some(c) = stack.pop() {
            let cell = &self.cells[c as usize];
            let is_leaf = cell.children.iter().all(|&ch| ch == NONE);
            if is_leaf {
                for &j in &self.order[cell.start as usize..cell.end as usize] {
                    let j = j as usize;
                    if j != i {
                        let (dx, dy) = pair_repulsion(i, j, p, self.points[j], strength);
                        fx += dx;
                        fy += dy;
                    }
                }
                continue;
            }
            let dx = p.x - cell.center_of_mass.x;
            let dy = p.y - cell.center_of_mass.y;
            let d2 = dx * dx + dy * dy;
            if d2 > 0.0 && cell.width * cell.width < theta * theta * d2 {
                let f = strength * cell.mass / d2;
                fx += f * dx;
                fy += f * dy;
            } else {
                stack.extend(cell.children.iter().copied().filter(|&ch| ch != NONE));
            }
        }
        (fx, fy)
    }
}

/// Repulsive force on `a` from `b`, magnitude `strength / distance`.
/// Coincident points push apart along a direction derived from their indices.
pub(crate) fn pair_repulsion(i: usize, j: usize, a: Point, b: Point, strength: f64) -> (f64, f64) {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let d2 = dx * dx + dy * dy;
    if d2 > 1e-18 {
        let f = strength / d2;
        (f * dx, f * dy)
    } else {
        let (lo, hi) = (i.min(j), i.max(j));
        let angle = ((lo * 7919 + hi * 104_729) % 3600) as f64 * std::f64::consts::PI / 1800.0;
        let sign = if i < j { 1.0 } else { -1.0 };
        let f = strength.sqrt();
        (sign * f * angle.cos(), sign * f * angle.sin())
    }
}
