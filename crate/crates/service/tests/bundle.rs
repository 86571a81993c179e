mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use proptest::prelude::*;
use topicmap::ingest::BaseSet;
use topicmap::normalize::canonicalize;
use topicmap::overlay::{hr_overlay, CitationMode};
use topicmap::TopicId;
use topicmap_service::bundle::level_file;
use topicmap_service::{build_bundle, verify, BuildConfig, BuildStatus, Bundle, BundleError};

use common::{fixture_bundle, fixture_config, fixture_corpus};

fn files_under(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&path).unwrap(),
                );
            }
        }
    }
    out
}

fn entries(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

fn t(n: u32) -> TopicId {
    TopicId(n)
}

// t0 algorithms, t1 computer vision, t2 data mining, t3 databases,
// t4 graph drawing, t5 machine learning

#[test]
fn build_writes_every_file() {
    let tmp = tempfile::tempdir().unwrap();
    let b = fixture_bundle(tmp.path(), "b");
    let m = &b.manifest;
    assert_eq!(m.files.len(), 13);
    assert!((1..=8).all(|z| m.files.contains_key(&level_file(z))));
    assert_eq!(
        (
            m.counts.topics,
            m.counts.nodes,
            m.counts.edges,
            m.counts.clusters
        ),
        (6, 6, 4, 3)
    );
    assert_eq!(m.created, "1970-01-01T00:00:00Z");
    assert_eq!(m.config_digest, fixture_config().digest());
    assert_eq!(m.variant, BaseSet::World);
    assert_eq!(m.counts.visible.len(), 8);
    assert_eq!(*m.counts.visible.last().unwrap(), 6);
    assert_eq!(verify(&tmp.path().join("b")).unwrap(), b.manifest);
}

#[test]
fn builds_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    fixture_bundle(tmp.path(), "a");
    fixture_bundle(tmp.path(), "b");
    let a = files_under(&tmp.path().join("a"));
    let b = files_under(&tmp.path().join("b"));
    assert_eq!(a.len(), 14);
    assert_eq!(a, b);
}

#[test]
fn rerun_is_up_to_date() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("b");
    let first = build_bundle(&fixture_corpus(), &fixture_config(), &out, 0).unwrap();
    assert_eq!(first.status, BuildStatus::Built);
    assert_eq!(
        first.timings.iter().map(|(s, _)| *s).collect::<Vec<_>>(),
        ["normalize", "graph", "layout", "lod", "write"]
    );
    let before = files_under(&out);
    let again = build_bundle(&fixture_corpus(), &fixture_config(), &out, 0).unwrap();
    assert_eq!(again.status, BuildStatus::UpToDate);
    assert!(again.timings.is_empty());
    assert_eq!(again.manifest, first.manifest);
    assert_eq!(files_under(&out), before);
}

#[test]
fn changed_config_replaces_the_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("b");
    build_bundle(&fixture_corpus(), &fixture_config(), &out, 0).unwrap();
    let cfg = BuildConfig {
        seed: 8,
        ..fixture_config()
    };
    let r = build_bundle(&fixture_corpus(), &cfg, &out, 0).unwrap();
    assert_eq!(r.status, BuildStatus::Built);
    assert_eq!(verify(&out).unwrap().seed, 8);
    assert_eq!(entries(tmp.path()), ["b"]);
}

#[test]
fn new_timestamp_rebuilds() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("b");
    build_bundle(&fixture_corpus(), &fixture_config(), &out, 0).unwrap();
    let r = build_bundle(&fixture_corpus(), &fixture_config(), &out, 1_700_000_000).unwrap();
    assert_eq!(r.status, BuildStatus::Built);
    assert_eq!(r.manifest.created, "2023-11-14T22:13:20Z");
}

#[test]
fn us_variant_counts_only_us_profiles() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("us");
    let cfg = BuildConfig {
        variant: BaseSet::Us,
        ..fixture_config()
    };
    build_bundle(&fixture_corpus(), &cfg, &out, 0).unwrap();
    let b = Bundle::load(&out).unwrap();
    let weights: BTreeMap<TopicId, u32> =
        b.graph.nodes().iter().map(|n| (n.id, n.weight)).collect();
    let expected: BTreeMap<TopicId, u32> = [
        (t(0), 1),
        (t(1), 2),
        (t(2), 1),
        (t(3), 1),
        (t(4), 1),
        (t(5), 3),
    ]
    .into();
    assert_eq!(weights, expected);
    assert_eq!(b.manifest.variant, BaseSet::Us);
    // topic ids agree with the world lexicon
    let (lexicon, _) = canonicalize(&fixture_corpus());
    assert_eq!(b.lexicon, lexicon);
}

#[test]
fn failed_build_leaves_no_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("b");
    let cfg = BuildConfig {
        min_node_weight: 100,
        ..fixture_config()
    };
    let err = build_bundle(&fixture_corpus(), &cfg, &out, 0).unwrap_err();
    assert!(
        matches!(err, BundleError::EmptyGraph(BaseSet::World)),
        "{err}"
    );
    assert!(!out.exists());
    assert!(entries(tmp.path()).is_empty());
}

#[test]
fn failed_build_keeps_the_previous_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("b");
    build_bundle(&fixture_corpus(), &fixture_config(), &out, 0).unwrap();
    let before = files_under(&out);
    let cfg = BuildConfig {
        min_node_weight: 100,
        ..fixture_config()
    };
    assert!(build_bundle(&fixture_corpus(), &cfg, &out, 0).is_err());
    assert_eq!(files_under(&out), before);
    assert_eq!(entries(tmp.path()), ["b"]);
}

#[test]
fn invalid_config_is_rejected_before_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("b");
    let cfg = BuildConfig {
        clusters: 0,
        ..fixture_config()
    };
    assert!(matches!(
        build_bundle(&fixture_corpus(), &cfg, &out, 0),
        Err(BundleError::Config(_))
    ));
    assert!(!out.exists());
}

#[test]
fn refuses_to_replace_a_foreign_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("b");
    fs::create_dir(&out).unwrap();
    fs::write(out.join("notes.txt"), "keep me").unwrap();
    let err = build_bundle(&fixture_corpus(), &fixture_config(), &out, 0).unwrap_err();
    assert!(matches!(err, BundleError::NotABundle(_)), "{err}");
    assert_eq!(
        fs::read_to_string(out.join("notes.txt")).unwrap(),
        "keep me"
    );
}

#[test]
fn empty_output_directory_is_filled() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("b");
    fs::create_dir(&out).unwrap();
    build_bundle(&fixture_corpus(), &fixture_config(), &out, 0).unwrap();
    assert!(verify(&out).is_ok());
}

#[test]
fn tampered_file_fails_validation() {
    let tmp = tempfile::tempdir().unwrap();
    fixture_bundle(tmp.path(), "b");
    let out = tmp.path().join("b");
    let path = out.join("levels/3.json");
    let mut bytes = fs::read(&path).unwrap();
    bytes.push(b' ');
    fs::write(&path, bytes).unwrap();
    match Bundle::load(&out) {
        Err(BundleError::DigestMismatch { file, .. }) => assert_eq!(file, "levels/3.json"),
        other => panic!("expected a digest mismatch, got {other:?}"),
    }
    assert!(verify(&out).is_err());
}

#[test]
fn tampered_manifest_config_fails_validation() {
    let tmp = tempfile::tempdir().unwrap();
    fixture_bundle(tmp.path(), "b");
    let path = tmp.path().join("b/manifest.json");
    let text = fs::read_to_string(&path)
        .unwrap()
        .replacen("\"clusters\": 3", "\"clusters\": 4", 1);
    fs::write(&path, text).unwrap();
    let err = Bundle::load(&tmp.path().join("b")).unwrap_err();
    assert!(
        matches!(err, BundleError::ConfigDigestMismatch { .. }),
        "{err}"
    );
    assert!(err.to_string().contains("config digest mismatch"));
}

#[test]
fn tampered_corpus_fails_validation() {
    let tmp = tempfile::tempdir().unwrap();
    fixture_bundle(tmp.path(), "b");
    let path = tmp.path().join("b/corpus/profiles.jsonl");
    let text = fs::read_to_string(&path)
        .unwrap()
        .replace("\"cites\":100", "\"cites\":101");
    fs::write(&path, text).unwrap();
    let err = Bundle::load(&tmp.path().join("b")).unwrap_err();
    assert!(
        matches!(err, BundleError::DigestMismatch { ref file, .. } if file == "corpus/profiles.jsonl"),
        "{err}"
    );
}

#[test]
fn missing_and_foreign_directories_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(matches!(
        Bundle::load(&tmp.path().join("missing")),
        Err(BundleError::NotFound(_))
    ));
    assert!(matches!(
        Bundle::load(tmp.path()),
        Err(BundleError::NotABundle(_))
    ));
}

fn shared_bundle() -> &'static Bundle {
    static DIR: OnceLock<(tempfile::TempDir, Bundle)> = OnceLock::new();
    let (_, b) = DIR.get_or_init(|| {
        let tmp = tempfile::tempdir().unwrap();
        let b = fixture_bundle(tmp.path(), "b");
        (tmp, b)
    });
    b
}

#[test]
fn search_examples() {
    let b = shared_bundle();
    let labels = |q: &str, limit: usize| {
        b.search(q, limit)
            .into_iter()
            .map(|h| h.label)
            .collect::<Vec<_>>()
    };
    assert_eq!(labels("vision", 10), ["computer vision"]);
    assert_eq!(labels("VISION", 10), ["computer vision"]);
    assert_eq!(labels("vision computer", 10), ["computer vision"]);
    assert!(labels("", 10).is_empty());
    assert!(labels("   ", 10).is_empty());
    assert!(labels("vision robotics", 10).is_empty());
    // weight 3 ties are ordered by label
    assert_eq!(
        labels("i", 10),
        [
            "algorithms",
            "computer vision",
            "machine learning",
            "data mining",
            "graph drawing"
        ]
    );
    assert_eq!(labels("i", 2), ["algorithms", "computer vision"]);
    assert!(labels("i", 0).is_empty());

    let hit = &b.search("graph drawing", 1)[0];
    assert_eq!(hit.id, t(4));
    assert_eq!(hit.weight, 2);
    assert_eq!([hit.x, hit.y], b.geometry.positions[&t(4)]);
    assert_eq!(Some(hit.level), b.first_visible_level(t(4)));
}

#[test]
fn node_info_examples() {
    let b = shared_bundle();
    let info = b.node_info("t0").unwrap();
    assert_eq!(info.label, "algorithms");
    assert_eq!(info.weight, 3);
    let neighbors: Vec<(TopicId, u32)> = info.neighbors.iter().map(|n| (n.id, n.weight)).collect();
    assert_eq!(neighbors, [(t(4), 2), (t(2), 1)]);
    assert_eq!(info.neighbors[0].label, "graph drawing");
    assert_eq!(info.cluster, b.geometry.clusters[&t(0)]);

    assert!(b
        .node_info("t3")
        .unwrap()
        .neighbors
        .iter()
        .all(|n| n.id == t(2)));
    assert!(matches!(
        b.node_info("zzz"),
        Err(BundleError::UnknownTopic(_))
    ));
    assert!(matches!(
        b.node_info("t99"),
        Err(BundleError::UnknownTopic(_))
    ));
}

#[test]
fn levels_are_nested_and_resolve() {
    let b = shared_bundle();
    let mut previous: BTreeSet<TopicId> = BTreeSet::new();
    for z in 1..=8u8 {
        let level = b.level(z).unwrap();
        assert_eq!(level.level, z);
        let shown: BTreeSet<TopicId> = level.visible.iter().map(|v| v.id).collect();
        assert!(previous.is_subset(&shown), "level {z} drops a label");
        for v in &level.visible {
            let info = b.node_info(&v.id.to_string()).unwrap();
            assert_eq!(
                (info.label.as_str(), info.x, info.y),
                (v.label.as_str(), v.x, v.y)
            );
            assert!(info.level <= z);
        }
        for e in &level.edges {
            assert!(shown.contains(&e.u) && shown.contains(&e.v));
        }
        previous = shown;
    }
    assert_eq!(previous.len(), b.graph.node_count());
    assert!(b.level(0).is_none() && b.level(9).is_none());
}

#[test]
fn geometry_covers_every_node() {
    let b = shared_bundle();
    let ids: BTreeSet<TopicId> = b.graph.nodes().iter().map(|n| n.id).collect();
    assert_eq!(
        b.geometry
            .positions
            .keys()
            .copied()
            .collect::<BTreeSet<_>>(),
        ids
    );
    assert_eq!(
        b.geometry.clusters.keys().copied().collect::<BTreeSet<_>>(),
        ids
    );
    assert_eq!(b.geometry.countries.len(), 3);
    let colors: BTreeSet<String> = b
        .geometry
        .countries
        .iter()
        .map(|c| c.color.to_string())
        .collect();
    assert_eq!(colors.len(), 3);
    let [x0, y0, x1, y1] = b.geometry.bounds;
    for [x, y] in b.geometry.positions.values() {
        assert!((x0..=x1).contains(x) && (y0..=y1).contains(y));
    }
}

#[test]
fn universities_report_researcher_counts() {
    let b = shared_bundle();
    let us = b.universities();
    let rows: Vec<(&str, usize, Option<u64>)> = us
        .iter()
        .map(|u| (u.id.as_str(), u.researchers, u.staff))
        .collect();
    assert_eq!(
        rows,
        [("u1", 3, Some(120)), ("u2", 2, None), ("u3", 3, None)]
    );
}

#[test]
fn overlays_delegate_to_the_library() {
    let b = shared_bundle();
    let (_, annotated) = canonicalize(&fixture_corpus());
    assert_eq!(
        b.hr("u1", BaseSet::Us).unwrap(),
        hr_overlay(&annotated, "u1", BaseSet::Us).unwrap()
    );
    let raw = b
        .citations("u1", CitationMode::Full, None, BaseSet::World)
        .unwrap();
    assert_eq!(raw.values[&t(5)], 150.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn search_hits_contain_every_word_and_are_ranked(
        words in proptest::collection::vec(prop_oneof![
            Just("a"), Just("i"), Just("in"), Just("ing"), Just("data"), Just("vision"), Just("D"), Just("zz")
        ], 0..3),
        limit in 0usize..8,
    ) {
        let b = shared_bundle();
        let q = words.join(" ");
        let hits = b.search(&q, limit);
        prop_assert!(hits.len() <= limit);
        let lowered: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
        for h in &hits {
            prop_assert!(lowered.iter().all(|w| h.label.contains(w.as_str())));
        }
        for w in hits.windows(2) {
            prop_assert!(w[0].weight >= w[1].weight);
        }
        // linear-scan oracle over the map labels
        let expected = if lowered.is_empty() {
            0
        } else {
            b.graph.nodes().iter().filter(|n| lowered.iter().all(|w| n.label.contains(w.as_str()))).count().min(limit)
        };
        prop_assert_eq!(hits.len(), expected);
    }
}
