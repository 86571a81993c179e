//! Build configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use topicmap::ingest::BaseSet;
use topicmap::layout::{ColorConfig, CountryConfig, EmbedConfig, LayoutConfig, OverlapConfig};
use topicmap::lod::{LabelMetrics, LEVELS};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("levels must be {LEVELS}, got {0}")]
    Levels(u8),
    #[error("{name} must be at least 1")]
    BelowOne { name: &'static str },
    #[error("cannot read config {path}: {detail}")]
    Read { path: PathBuf, detail: String },
    #[error("invalid config {path}: {detail}")]
    Parse { path: PathBuf, detail: String },
}

/// Everything that determines the contents of a bundle.
///
/// The output directory is not part of the digest, so the same configuration
/// built into two directories yields identical bundles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildConfig {
    pub seed: u64,
    /// Smallest number of researchers for a topic to stay on the map.
    pub min_node_weight: u32,
    /// Smallest co-listing count for an edge to stay on the map.
    pub min_edge_weight: u32,
    /// Number of clusters (countries).
    pub clusters: usize,
    pub levels: u8,
    pub variant: BaseSet,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub embed: EmbedConfig,
    pub overlap: OverlapConfig,
    pub countries: CountryConfig,
    pub colors: ColorConfig,
    pub labels: LabelMetrics,
}

impl Default for BuildConfig {
    /// Thresholds sized for the desk-scale synthetic corpus.
    fn default() -> Self {
        let layout = LayoutConfig::default();
        BuildConfig {
            seed: 7,
            min_node_weight: 4,
            min_edge_weight: 2,
            clusters: layout.clusters,
            levels: LEVELS,
            variant: BaseSet::World,
            out: None,
            embed: layout.embed,
            overlap: layout.overlap,
            countries: layout.countries,
            colors: layout.colors,
            labels: layout.labels,
        }
    }
}

impl BuildConfig {
    /// Reads a TOML file with the same keys; missing keys take defaults.
    pub fn from_toml_file(path: &Path) -> Result<BuildConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.levels != LEVELS {
            return Err(ConfigError::Levels(self.levels));
        }
        if self.min_node_weight < 1 {
            return Err(ConfigError::BelowOne {
                name: "min_node_weight",
            });
        }
        if self.min_edge_weight < 1 {
            return Err(ConfigError::BelowOne {
                name: "min_edge_weight",
            });
        }
        if self.clusters < 1 {
            return Err(ConfigError::BelowOne { name: "clusters" });
        }
        Ok(())
    }

    pub fn layout(&self) -> LayoutConfig {
        LayoutConfig {
            embed: self.embed.clone(),
            overlap: self.overlap.clone(),
            clusters: self.clusters,
            countries: self.countries.clone(),
            colors: self.colors.clone(),
            labels: self.labels,
        }
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex_digest(&json)
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
