//! Country coloring by spectral ordering of the adjacency graph.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::countries::country_adjacency;
use crate::geom::Point;

/// 24-bit color, serialized as `#rrggbb`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Default for Rgb {
    fn default() -> Self {
        Rgb(200, 200, 200)
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

impl std::str::FromStr for Rgb {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let hex = s
            .strip_prefix('#')
            .filter(|h| h.len() == 6)
            .ok_or_else(|| format!("bad color {s:?}"))?;
        let byte = |i: usize| {
            u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| format!("bad color {s:?}"))
        };
        Ok(Rgb(byte(0)?, byte(2)?, byte(4)?))
    }
}

impl Serialize for Rgb {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rgb {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Euclidean distance in RGB space.
pub fn rgb_distance(a: Rgb, b: Rgb) -> f64 {
    let d = |x: u8, y: u8| f64::from(x) - f64::from(y);
    (d(a.0, b.0).powi(2) + d(a.1, b.1).powi(2) + d(a.2, b.2).powi(2)).sqrt()
}

/// Sixteen points of the lattice {95, 175, 255}^3, so any two entries are at
/// least 80 apart.
pub const PALETTE: [Rgb; 16] = [
    Rgb(255, 175, 175),
    Rgb(175, 255, 175),
    Rgb(175, 175, 255),
    Rgb(255, 255, 175),
    Rgb(255, 175, 255),
    Rgb(175, 255, 255),
    Rgb(255, 255, 95),
    Rgb(95, 175, 255),
    Rgb(255, 175, 95),
    Rgb(175, 255, 95),
    Rgb(95, 255, 175),
    Rgb(175, 95, 255),
    Rgb(255, 95, 175),
    Rgb(95, 255, 255),
    Rgb(175, 175, 95),
    Rgb(95, 175, 175),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColorConfig {
    /// Adjacent countries closer than this are recolored.
    pub min_distance: f64,
    /// Palette step between consecutive clusters in spectral order.
    pub stride: usize,
}

impl Default for ColorConfig {
    fn default() -> Self {
        ColorConfig {
            min_distance: 80.0,
            stride: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coloring {
    pub colors: Vec<Rgb>,
    pub adjacency: Vec<(usize, usize)>,
    /// Clusters sorted by their Fiedler-vector entry.
    pub order: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Colors one country per entry of `rings`.
pub fn color_countries(rings: &[Vec<Vec<Point>>], cfg: &ColorConfig) -> Coloring {
    let k = rings.len();
    let adjacency = country_adjacency(rings);
    let order = spectral_order(k, &adjacency);
    let p = PALETTE.len();
    let stride = if cfg.stride == 0 { 1 } else { cfg.stride };
    let mut colors = vec![PALETTE[0]; k];
    for (rank, &c) in order.iter().enumerate() {
        colors[c] = PALETTE[(rank * stride) % p];
    }

    let mut neighbours = vec![Vec::new(); k];
    for &(a, b) in &adjacency {
        neighbours[a].push(b);
        neighbours[b].push(a);
    }
    let mut warnings = Vec::new();
    for &c in &order {
        let clash = neighbours[c]
            .iter()
            .any(|&d| rgb_distance(colors[c], colors[d]) < cfg.min_distance);
        if !clash {
            continue;
        }
        let fit = PALETTE.iter().copied().find(|&cand| {
            neighbours[c]
                .iter()
                .all(|&d| rgb_distance(cand, colors[d]) >= cfg.min_distance)
        });
        match fit {
            Some(color) => colors[c] = color,
            None => {
                let msg =
                    format!("no palette color keeps cluster {c} apart from all its neighbours");
                tracing::warn!("{msg}");
                warnings.push(msg);
            }
        }
    }
    Coloring {
        colors,
        adjacency,
        order,
        warnings,
    }
}

/// Clusters ordered by the Fiedler vector of the adjacency Laplacian, ties by id.
fn spectral_order(k: usize, adjacency: &[(usize, usize)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..k).collect();
    if k < 3 {
        return order;
    }
    let mut lap = DMatrix::<f64>::zeros(k, k);
    for &(a, b) in adjacency {
        lap[(a, b)] -= 1.0;
        lap[(b, a)] -= 1.0;
        lap[(a, a)] += 1.0;
        lap[(b, b)] += 1.0;
    }
    let eig = nalgebra::SymmetricEigen::new(lap);
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });
    let mut fiedler: Vec<f64> = eig.eigenvectors.column(idx[1]).iter().copied().collect();
    let pivot = (0..k).fold(0, |best, i| {
        if fiedler[i].abs() > fiedler[best].abs() + 1e-12 {
            i
        } else {
            best
        }
    });
    if fiedler[pivot] < 0.0 {
        fiedler.iter_mut().for_each(|x| *x = -*x);
    }
    order.sort_by(|&a, &b| fiedler[a].total_cmp(&fiedler[b]).then(a.cmp(&b)));
    order
}
