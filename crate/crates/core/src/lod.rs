//! Zoom levels: font sizes, label boxes and greedy per-level visibility.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::geom::{Point, Rect, Size};
use crate::graph::{Edge, TopicGraph};
use crate::layout::Embedding;
use crate::TopicId;

/// Number of precomputed zoom levels.
pub const LEVELS: u8 = 8;

/// Font size in percent of the default font: `w / 10` clamped to `[80, 200]`.
pub fn font_size(weight: u32) -> f64 {
    (weight as f64 / 10.0).clamp(80.0, 200.0)
}

/// World units per screen unit at `level`: `2^(level - 1)`.
pub fn scale(level: u8) -> f64 {
    f64::from(1u32 << (level.max(1) - 1))
}

/// Label box geometry in em fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelMetrics {
    pub width_ratio: f64,
    pub height_ratio: f64,
}

impl Default for LabelMetrics {
    fn default() -> Self {
        LabelMetrics {
            width_ratio: 0.6,
            height_ratio: 1.2,
        }
    }
}

impl LabelMetrics {
    /// Box of a label at `level`, in world units.
    pub fn label_size(&self, label: &str, weight: u32, level: u8) -> Size {
        let font = font_size(weight);
        let s = scale(level);
        Size {
            width: label.chars().count() as f64 * font * self.width_ratio / s,
            height: font * self.height_ratio / s,
        }
    }

    pub fn label_box(&self, center: Point, label: &str, weight: u32, level: u8) -> Rect {
        Rect::centered(center, self.label_size(label, weight, level))
    }
}

/// Visible labels of one zoom level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelView {
    pub level: u8,
    /// In placement order: weight descending, then id ascending.
    pub visible: Vec<TopicId>,
    pub label_boxes: BTreeMap<TopicId, Rect>,
    pub font_size: BTreeMap<TopicId, f64>,
}

impl LevelView {
    pub fn is_visible(&self, id: TopicId) -> bool {
        self.label_boxes.contains_key(&id)
    }
}

/// Greedy visibility for all levels.
///
/// Nodes are visited by weight descending (ties by id); a node becomes
/// visible when its box misses every box accepted so far. Each level starts
/// from the previous level's visible set, so zooming in never hides a label.
pub fn compute_levels(
    g: &TopicGraph,
    embedding: &Embedding,
    metrics: &LabelMetrics,
) -> Vec<LevelView> {
    let nodes = g.nodes();
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| {
        nodes[b]
            .weight
            .cmp(&nodes[a].weight)
            .then(nodes[a].id.cmp(&nodes[b].id))
    });

    let mut visible = vec![false; nodes.len()];
    let mut views = Vec::with_capacity(LEVELS as usize);
    for level in 1..=LEVELS {
        let boxes: Vec<Rect> = nodes
            .iter()
            .zip(&embedding.positions)
            .map(|(n, &p)| metrics.label_box(p, &n.label, n.weight, level))
            .collect();
        let mut grid = Grid::new(&boxes);
        for &i in &order {
            if visible[i] {
                grid.insert(i, &boxes);
            }
        }
        for &i in &order {
            if !visible[i] && !grid.hits(&boxes[i], &boxes) {
                visible[i] = true;
                grid.insert(i, &boxes);
            }
        }
        let shown: Vec<usize> = order.iter().copied().filter(|&i| visible[i]).collect();
        views.push(LevelView {
            level,
            visible: shown.iter().map(|&i| nodes[i].id).collect(),
            label_boxes: shown.iter().map(|&i| (nodes[i].id, boxes[i])).collect(),
            font_size: shown
                .iter()
                .map(|&i| (nodes[i].id, font_size(nodes[i].weight)))
                .collect(),
        });
    }
    views
}

/// Uniform bucket grid over accepted boxes. Cell size is the largest box
/// extent, so each box touches at most four cells.
struct Grid {
    cell: f64,
    buckets: std::collections::HashMap<(i64, i64), Vec<usize>>,
}

impl Grid {
    fn new(boxes: &[Rect]) -> Self {
        let cell = boxes
            .iter()
            .map(|r| r.width().max(r.height()))
            .fold(0.0, f64::max)
            .max(1e-9);
        Grid {
            cell,
            buckets: Default::default(),
        }
    }

    fn cells(&self, r: &Rect) -> impl Iterator<Item = (i64, i64)> {
        let (x0, x1) = (
            (r.min_x / self.cell).floor() as i64,
            (r.max_x / self.cell).floor() as i64,
        );
        let (y0, y1) = (
            (r.min_y / self.cell).floor() as i64,
            (r.max_y / self.cell).floor() as i64,
        );
        (x0..=x1).flat_map(move |x| (y0..=y1).map(move |y| (x, y)))
    }

    fn insert(&mut self, i: usize, boxes: &[Rect]) {
        let cells: Vec<_> = self.cells(&boxes[i]).collect();
        for c in cells {
            self.buckets.entry(c).or_default().push(i);
        }
    }

    fn hits(&self, r: &Rect, boxes: &[Rect]) -> bool {
        self.cells(r).any(|c| {
            self.buckets
                .get(&c)
                .is_some_and(|b| b.iter().any(|&j| boxes[j].intersects(r)))
        })
    }
}

/// First level at which each node is visible.
pub fn first_visible_levels(views: &[LevelView]) -> BTreeMap<TopicId, u8> {
    let mut out = BTreeMap::new();
    for v in views {
        for &id in &v.visible {
            out.entry(id).or_insert(v.level);
        }
    }
    out
}

/// One visible label in a level export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibleLabel {
    pub id: TopicId,
    pub x: f64,
    pub y: f64,
    pub label: String,
    pub font: f64,
    pub cluster: usize,
    pub weight: u32,
    pub width: f64,
    pub height: f64,
}

/// The `levels/{z}.json` document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelExport {
    pub level: u8,
    pub visible: Vec<VisibleLabel>,
    /// Edges whose endpoints are both visible.
    pub edges: Vec<Edge>,
}

pub fn level_export(
    g: &TopicGraph,
    embedding: &Embedding,
    cluster_of: &[usize],
    view: &LevelView,
) -> LevelExport {
    let visible = view
        .visible
        .iter()
        .map(|&id| {
            let i = g.index_of(id).expect("visible node is in the graph");
            let n = &g.nodes()[i];
            let r = view.label_boxes[&id];
            VisibleLabel {
                id,
                x: embedding.positions[i].x,
                y: embedding.positions[i].y,
                label: n.label.clone(),
                font: view.font_size[&id],
                cluster: cluster_of[i],
                weight: n.weight,
                width: r.width(),
                height: r.height(),
            }
        })
        .collect();
    let shown: BTreeSet<TopicId> = view.visible.iter().copied().collect();
    let edges = g
        .edges()
        .iter()
        .filter(|e| shown.contains(&e.u) && shown.contains(&e.v))
        .cloned()
        .collect();
    LevelExport {
        level: view.level,
        visible,
        edges,
    }
}
