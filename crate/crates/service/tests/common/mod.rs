#![allow(dead_code)]

use std::path::{Path, PathBuf};

use topicmap::Corpus;
use topicmap_service::cli::load_corpus;
use topicmap_service::{build_bundle, BuildConfig, Bundle};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/three_universities")
}

pub fn fixture_profiles() -> PathBuf {
    fixture_dir().join("profiles.jsonl")
}

pub fn fixture_universities() -> PathBuf {
    fixture_dir().join("universities.jsonl")
}

pub fn fixture_corpus() -> Corpus {
    load_corpus(&fixture_profiles(), &fixture_universities(), true).expect("fixture corpus loads")
}

/// Keeps every topic and edge of the small fixture.
pub fn fixture_config() -> BuildConfig {
    BuildConfig {
        min_node_weight: 1,
        min_edge_weight: 1,
        clusters: 3,
        ..BuildConfig::default()
    }
}

/// Builds the fixture bundle into `dir/name` and loads it.
pub fn fixture_bundle(dir: &Path, name: &str) -> Bundle {
    let out = dir.join(name);
    build_bundle(&fixture_corpus(), &fixture_config(), &out, 0).expect("fixture bundle builds");
    Bundle::load(&out).expect("fixture bundle loads")
}
