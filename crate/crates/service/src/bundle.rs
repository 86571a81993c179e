//! Immutable on-disk map bundles.
//!
//! A bundle directory holds:
//!
//! ```text
//! manifest.json               seed, variant, config and its digest, file digests
//! graph.json                  {nodes:[{id,label,weight}], edges:[[u,v,w]]}
//! geometry.json               {bounds, positions, clusters, countries}
//! levels/1.json .. 8.json     {level, visible:[...], edges:[[u,v,w]]}
//! lexicon.json                {topic_id: {name, frequency, stem, fingerprint}}
//! corpus/profiles.jsonl       the input corpus the bundle was built from
//! corpus/universities.jsonl
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use topicmap::graph::{build_graph, filter_graph};
use topicmap::ingest::{load_universities, parse_profiles, BaseSet, Corpus, ErrorMode, Region};
use topicmap::layout::{run_layout, LayoutError, Rgb};
use topicmap::lod::{compute_levels, level_export, LevelExport, LEVELS};
use topicmap::normalize::{canonicalize, TopicLexicon};
use topicmap::overlay::{
    citations_overlay, department_overlay, document_overlay, hr_overlay,
    normalized_citations_overlay, CitationMode, NormalizeMode, OverlayError, OverlayResult,
};
use topicmap::{TopicGraph, TopicId};

use crate::config::{hex_digest, BuildConfig, ConfigError};

pub const FORMAT_VERSION: u32 = 1;

const MANIFEST: &str = "manifest.json";
const GRAPH: &str = "graph.json";
const GEOMETRY: &str = "geometry.json";
const LEXICON: &str = "lexicon.json";
const PROFILES: &str = "corpus/profiles.jsonl";
const UNIVERSITIES: &str = "corpus/universities.jsonl";

pub fn level_file(z: u8) -> String {
    format!("levels/{z}.json")
}

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("no topics survive the thresholds for variant {0}")]
    EmptyGraph(BaseSet),
    #[error("layout failed: {0}")]
    Layout(#[from] LayoutError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {detail}")]
    Malformed { path: PathBuf, detail: String },
    #[error("bundle directory {0} does not exist")]
    NotFound(PathBuf),
    #[error("{0} exists and is not a bundle; refusing to replace it")]
    NotABundle(PathBuf),
    #[error("bundle format {found} is not supported (expected {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("manifest lists no digest for {0}")]
    MissingFile(String),
    #[error("digest mismatch for {file}: manifest {expected}, file {actual}")]
    DigestMismatch {
        file: String,
        expected: String,
        actual: String,
    },
    #[error("config digest mismatch: manifest {expected}, config {actual}")]
    ConfigDigestMismatch { expected: String, actual: String },
    #[error("level {level} references topic {id} missing from the graph")]
    DanglingTopic { level: u8, id: TopicId },
    #[error("lexicon.json does not match the lexicon of the bundled corpus")]
    LexiconMismatch,
    #[error("unknown topic {0}")]
    UnknownTopic(String),
    #[error("invalid corpus: {0}")]
    Corpus(String),
}

impl BundleError {
    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> BundleError + '_ {
        move |source| BundleError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRef {
    pub profiles: String,
    pub universities: String,
    /// SHA-256 over the two file digests.
    pub digest: String,
    pub profile_count: usize,
    pub university_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleCounts {
    pub topics: usize,
    pub nodes: usize,
    pub edges: usize,
    pub clusters: usize,
    /// Visible labels per level.
    pub visible: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub seed: u64,
    pub variant: BaseSet,
    pub config_digest: String,
    pub config: BuildConfig,
    /// RFC 3339 UTC.
    pub created: String,
    pub corpus: CorpusRef,
    pub counts: BundleCounts,
    /// Relative path -> SHA-256 of every other file in the bundle.
    pub files: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryExport {
    pub cluster: usize,
    pub color: Rgb,
    pub rings: Vec<Vec<[f64; 2]>>,
}

/// The `geometry.json` document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryExport {
    /// `[min_x, min_y, max_x, max_y]` of the box the countries partition.
    pub bounds: [f64; 4],
    pub positions: BTreeMap<TopicId, [f64; 2]>,
    pub clusters: BTreeMap<TopicId, usize>,
    pub countries: Vec<CountryExport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuildStatus {
    Built,
    /// The output already held a valid bundle for the same corpus and config.
    UpToDate,
}

#[derive(Debug, Clone)]
pub struct BuildReport {
    pub status: BuildStatus,
    pub manifest: Manifest,
    /// Stage name and wall time, in pipeline order. Empty when up to date.
    pub timings: Vec<(&'static str, Duration)>,
}

/// Formats seconds since the Unix epoch as RFC 3339 UTC.
pub fn rfc3339(unix_seconds: i64) -> String {
    time::OffsetDateTime::from_unix_timestamp(unix_seconds)
        .unwrap_or(time::OffsetDateTime::UNIX_EPOCH)
        .format(&time::format_description::well_known::Rfc3339)
        .expect("UTC timestamps format")
}

fn corpus_files(corpus: &Corpus) -> (Vec<u8>, Vec<u8>) {
    let mut profiles = Vec::new();
    corpus
        .write_profiles(&mut profiles)
        .expect("writing to memory");
    let mut universities = Vec::new();
    corpus
        .write_universities(&mut universities)
        .expect("writing to memory");
    (profiles, universities)
}

fn corpus_digest(profiles_digest: &str, universities_digest: &str) -> String {
    hex_digest(format!("{profiles_digest}\n{universities_digest}\n").as_bytes())
}

fn lexicon_json(lexicon: &TopicLexicon) -> Vec<u8> {
    serde_json::to_vec(&lexicon.export()).expect("lexicon serializes")
}

/// Runs the pipeline on `corpus` and writes the bundle to `out`.
///
/// Topics are canonicalized over the whole corpus so ids agree across
/// variants; the graph counts only profiles of the variant's universities.
/// The bundle is assembled in a sibling temporary directory and renamed into
/// place, so a failed build leaves `out` as it was. When `out` already holds
/// a valid bundle with the same config, corpus and timestamp nothing is
/// rebuilt.
pub fn build_bundle(
    corpus: &Corpus,
    cfg: &BuildConfig,
    out: &Path,
    created_unix: i64,
) -> Result<BuildReport, BundleError> {
    cfg.validate()?;
    let config_digest = cfg.digest();
    let created = rfc3339(created_unix);
    let (profiles_bytes, universities_bytes) = corpus_files(corpus);
    let profiles_digest = hex_digest(&profiles_bytes);
    let universities_digest = hex_digest(&universities_bytes);
    let corpus_ref = CorpusRef {
        profiles: PROFILES.to_string(),
        universities: UNIVERSITIES.to_string(),
        digest: corpus_digest(&profiles_digest, &universities_digest),
        profile_count: corpus.len(),
        university_count: corpus.universities().len(),
    };

    if out.exists() {
        if let Ok(existing) = verify(out) {
            if existing.config_digest == config_digest
                && existing.corpus.digest == corpus_ref.digest
                && existing.created == created
            {
                tracing::info!(out = %out.display(), "bundle is up to date");
                return Ok(BuildReport {
                    status: BuildStatus::UpToDate,
                    manifest: existing,
                    timings: Vec::new(),
                });
            }
        } else if !is_replaceable(out)? {
            return Err(BundleError::NotABundle(out.to_path_buf()));
        }
    }

    let mut timings = Vec::new();
    let mut stage = |name: &'static str, start: Instant| {
        let elapsed = start.elapsed();
        tracing::info!(stage = name, ms = elapsed.as_millis() as u64, "stage done");
        timings.push((name, elapsed));
    };

    let t = Instant::now();
    let (lexicon, annotated) = canonicalize(corpus);
    stage("normalize", t);

    let t = Instant::now();
    let full = build_graph(&annotated.restrict(cfg.variant), &lexicon);
    let graph = filter_graph(&full, cfg.min_node_weight, cfg.min_edge_weight);
    stage("graph", t);
    if graph.is_empty() {
        return Err(BundleError::EmptyGraph(cfg.variant));
    }

    let t = Instant::now();
    let map = run_layout(&graph, &cfg.layout(), cfg.seed)?;
    stage("layout", t);

    let t = Instant::now();
    let views = compute_levels(&graph, &map.embedding, &cfg.labels);
    let levels: Vec<LevelExport> = views
        .iter()
        .map(|v| level_export(&graph, &map.embedding, &map.countries.cluster_of, v))
        .collect();
    stage("lod", t);

    let t = Instant::now();
    let b = map.countries.bounds;
    let geometry = GeometryExport {
        bounds: [b.min_x, b.min_y, b.max_x, b.max_y],
        positions: map.embedding.positions_map(),
        clusters: map
            .embedding
            .ids
            .iter()
            .copied()
            .zip(map.countries.cluster_of.iter().copied())
            .collect(),
        countries: map
            .countries
            .countries
            .iter()
            .map(|c| CountryExport {
                cluster: c.cluster,
                color: c.color,
                rings: c
                    .rings
                    .iter()
                    .map(|r| r.iter().map(|p| [p.x, p.y]).collect())
                    .collect(),
            })
            .collect(),
    };

    let mut files: Vec<(String, Vec<u8>)> = vec![
        (GRAPH.to_string(), to_json(&graph)),
        (GEOMETRY.to_string(), to_json(&geometry)),
        (LEXICON.to_string(), lexicon_json(&lexicon)),
        (PROFILES.to_string(), profiles_bytes),
        (UNIVERSITIES.to_string(), universities_bytes),
    ];
    for l in &levels {
        files.push((level_file(l.level), to_json(l)));
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        seed: cfg.seed,
        variant: cfg.variant,
        config_digest,
        config: cfg.clone(),
        created,
        corpus: corpus_ref,
        counts: BundleCounts {
            topics: lexicon.len(),
            nodes: graph.node_count(),
            edges: graph.edge_count(),
            clusters: map.countries.countries.len(),
            visible: views.iter().map(|v| v.visible.len()).collect(),
        },
        files: files
            .iter()
            .map(|(name, bytes)| (name.clone(), hex_digest(bytes)))
            .collect(),
    };
    let mut manifest_bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    manifest_bytes.push(b'\n');
    files.push((MANIFEST.to_string(), manifest_bytes));
    write_atomically(out, &files)?;
    stage("write", t);

    Ok(BuildReport {
        status: BuildStatus::Built,
        manifest,
        timings,
    })
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    serde_json::to_vec(value).expect("export serializes")
}

/// An existing output may be replaced when it is an empty directory or holds
/// a manifest (a stale or damaged bundle).
fn is_replaceable(out: &Path) -> Result<bool, BundleError> {
    if !out.is_dir() {
        return Ok(false);
    }
    if out.join(MANIFEST).is_file() {
        return Ok(true);
    }
    Ok(fs::read_dir(out)
        .map_err(BundleError::io(out))?
        .next()
        .is_none())
}

fn write_atomically(out: &Path, files: &[(String, Vec<u8>)]) -> Result<(), BundleError> {
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(BundleError::io(&parent))?;
    let staging = tempfile::Builder::new()
        .prefix(".topicmap-build-")
        .tempdir_in(&parent)
        .map_err(BundleError::io(&parent))?;
    for (name, bytes) in files {
        let path = staging.path().join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(BundleError::io(dir))?;
        }
        fs::write(&path, bytes).map_err(BundleError::io(&path))?;
    }
    let retired = if out.exists() {
        let holder = tempfile::Builder::new()
            .prefix(".topicmap-old-")
            .tempdir_in(&parent)
            .map_err(BundleError::io(&parent))?;
        let retired = holder.path().join("bundle");
        fs::rename(out, &retired).map_err(BundleError::io(out))?;
        Some(holder)
    } else {
        None
    };
    let staged = staging.keep();
    if let Err(e) = fs::rename(&staged, out) {
        if let Some(holder) = &retired {
            let _ = fs::rename(holder.path().join("bundle"), out);
        }
        let _ = fs::remove_dir_all(&staged);
        return Err(BundleError::Io {
            path: out.to_path_buf(),
            source: e,
        });
    }
    drop(retired);
    Ok(())
}

fn read(dir: &Path, name: &str) -> Result<Vec<u8>, BundleError> {
    let path = dir.join(name);
    fs::read(&path).map_err(BundleError::io(&path))
}

fn parse<T: serde::de::DeserializeOwned>(
    dir: &Path,
    name: &str,
    bytes: &[u8],
) -> Result<T, BundleError> {
    serde_json::from_slice(bytes).map_err(|e| BundleError::Malformed {
        path: dir.join(name),
        detail: e.to_string(),
    })
}

fn required_files() -> Vec<String> {
    let mut names: Vec<String> = [GRAPH, GEOMETRY, LEXICON, PROFILES, UNIVERSITIES]
        .iter()
        .map(|s| s.to_string())
        .collect();
    names.extend((1..=LEVELS).map(level_file));
    names
}

fn read_manifest(dir: &Path) -> Result<(Manifest, Vec<u8>), BundleError> {
    if !dir.is_dir() {
        return Err(BundleError::NotFound(dir.to_path_buf()));
    }
    if !dir.join(MANIFEST).is_file() {
        return Err(BundleError::NotABundle(dir.to_path_buf()));
    }
    let bytes = read(dir, MANIFEST)?;
    let manifest: Manifest = parse(dir, MANIFEST, &bytes)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(BundleError::Version {
            found: manifest.format_version,
        });
    }
    let actual = manifest.config.digest();
    if actual != manifest.config_digest {
        return Err(BundleError::ConfigDigestMismatch {
            expected: manifest.config_digest,
            actual,
        });
    }
    Ok((manifest, bytes))
}

fn check_digest(manifest: &Manifest, name: &str, bytes: &[u8]) -> Result<(), BundleError> {
    let expected = manifest
        .files
        .get(name)
        .ok_or_else(|| BundleError::MissingFile(name.to_string()))?;
    let actual = hex_digest(bytes);
    if &actual != expected {
        return Err(BundleError::DigestMismatch {
            file: name.to_string(),
            expected: expected.clone(),
            actual,
        });
    }
    Ok(())
}

/// Checks the manifest, the config digest and the digest of every file.
pub fn verify(dir: &Path) -> Result<Manifest, BundleError> {
    let (manifest, _) = read_manifest(dir)?;
    for name in required_files() {
        check_digest(&manifest, &name, &read(dir, &name)?)?;
    }
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub id: TopicId,
    pub label: String,
    pub x: f64,
    pub y: f64,
    pub weight: u32,
    /// First level at which the label is visible.
    pub level: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: TopicId,
    pub label: String,
    /// Co-occurrence weight of the connecting edge.
    pub weight: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeInfo {
    pub id: TopicId,
    pub label: String,
    /// Number of researchers listing the topic.
    pub weight: u32,
    pub x: f64,
    pub y: f64,
    pub cluster: usize,
    pub level: u8,
    /// Heaviest edge first.
    pub neighbors: Vec<Neighbor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversityInfo {
    pub id: String,
    pub name: String,
    pub region: Region,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub staff: Option<u64>,
    pub researchers: usize,
}

/// A validated bundle loaded into memory with its annotated corpus.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub graph: TopicGraph,
    pub geometry: GeometryExport,
    pub levels: Vec<LevelExport>,
    pub lexicon: TopicLexicon,
    /// Profiles carry canonical topics.
    pub corpus: Corpus,
    first_level: BTreeMap<TopicId, u8>,
    raw: BTreeMap<String, Vec<u8>>,
}

impl Bundle {
    /// Loads and validates the bundle at `dir`.
    pub fn load(dir: &Path) -> Result<Bundle, BundleError> {
        let (manifest, manifest_bytes) = read_manifest(dir)?;
        let mut raw = BTreeMap::new();
        raw.insert(MANIFEST.to_string(), manifest_bytes);
        for name in required_files() {
            let bytes = read(dir, &name)?;
            check_digest(&manifest, &name, &bytes)?;
            raw.insert(name, bytes);
        }
        let expected = corpus_digest(&manifest.files[PROFILES], &manifest.files[UNIVERSITIES]);
        if expected != manifest.corpus.digest {
            return Err(BundleError::DigestMismatch {
                file: "corpus".to_string(),
                expected: manifest.corpus.digest.clone(),
                actual: expected,
            });
        }

        let graph: TopicGraph = parse(dir, GRAPH, &raw[GRAPH])?;
        let geometry: GeometryExport = parse(dir, GEOMETRY, &raw[GEOMETRY])?;
        let mut levels = Vec::with_capacity(LEVELS as usize);
        let mut first_level = BTreeMap::new();
        for z in 1..=LEVELS {
            let name = level_file(z);
            let level: LevelExport = parse(dir, &name, &raw[&name])?;
            for v in &level.visible {
                if graph.node(v.id).is_none() {
                    return Err(BundleError::DanglingTopic { level: z, id: v.id });
                }
                first_level.entry(v.id).or_insert(z);
            }
            levels.push(level);
        }

        let malformed = |name: &str, e: &dyn std::fmt::Display| BundleError::Malformed {
            path: dir.join(name),
            detail: e.to_string(),
        };
        let profiles = parse_profiles(Cursor::new(&raw[PROFILES]), ErrorMode::Strict)
            .map_err(|e| malformed(PROFILES, &e))?
            .profiles;
        let universities = load_universities(Cursor::new(&raw[UNIVERSITIES]))
            .map_err(|e| malformed(UNIVERSITIES, &e))?;
        let corpus =
            Corpus::new(profiles, universities).map_err(|e| BundleError::Corpus(e.to_string()))?;
        let (lexicon, corpus) = canonicalize(&corpus);
        if lexicon_json(&lexicon) != raw[LEXICON] {
            return Err(BundleError::LexiconMismatch);
        }

        Ok(Bundle {
            dir: dir.to_path_buf(),
            manifest,
            graph,
            geometry,
            levels,
            lexicon,
            corpus,
            first_level,
            raw,
        })
    }

    /// The stored bytes of a bundle file, e.g. `levels/3.json`.
    pub fn raw(&self, name: &str) -> Option<&[u8]> {
        self.raw.get(name).map(Vec::as_slice)
    }

    pub fn level(&self, z: u8) -> Option<&LevelExport> {
        self.levels.get(usize::from(z).checked_sub(1)?)
    }

    pub fn first_visible_level(&self, id: TopicId) -> Option<u8> {
        self.first_level.get(&id).copied()
    }

    /// Topics whose label contains every whitespace-separated word of `q`,
    /// case-insensitively, heaviest first (ties by label, then id).
    pub fn search(&self, q: &str, limit: usize) -> Vec<SearchHit> {
        let words: Vec<String> = q.split_whitespace().map(str::to_lowercase).collect();
        if words.is_empty() {
            return Vec::new();
        }
        let mut hits: Vec<SearchHit> = self
            .graph
            .nodes()
            .iter()
            .filter(|n| {
                let label = n.label.to_lowercase();
                words.iter().all(|w| label.contains(w.as_str()))
            })
            .map(|n| {
                let [x, y] = self.geometry.positions[&n.id];
                SearchHit {
                    id: n.id,
                    label: n.label.clone(),
                    x,
                    y,
                    weight: n.weight,
                    level: self.first_visible_level(n.id).unwrap_or(LEVELS),
                }
            })
            .collect();
        hits.sort_by(|a, b| {
            b.weight
                .cmp(&a.weight)
                .then_with(|| a.label.cmp(&b.label))
                .then(a.id.cmp(&b.id))
        });
        hits.truncate(limit);
        hits
    }

    /// Label, researcher count and neighbors of a map topic.
    pub fn node_info(&self, id: &str) -> Result<NodeInfo, BundleError> {
        let unknown = || BundleError::UnknownTopic(id.to_string());
        let tid: TopicId = id.parse().map_err(|_| unknown())?;
        let node = self.graph.node(tid).ok_or_else(unknown)?;
        let [x, y] = self.geometry.positions[&tid];
        let neighbors = self
            .graph
            .neighbors(tid)
            .into_iter()
            .map(|(n, weight)| Neighbor {
                id: n,
                label: self.graph.node(n).expect("edge endpoint").label.clone(),
                weight,
            })
            .collect();
        Ok(NodeInfo {
            id: tid,
            label: node.label.clone(),
            weight: node.weight,
            x,
            y,
            cluster: self.geometry.clusters[&tid],
            level: self.first_visible_level(tid).unwrap_or(LEVELS),
            neighbors,
        })
    }

    /// Universities sorted by id with their researcher counts.
    pub fn universities(&self) -> Vec<UniversityInfo> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for p in self.corpus.profiles() {
            *counts.entry(p.university_id.as_str()).or_insert(0) += 1;
        }
        let mut out: Vec<UniversityInfo> = self
            .corpus
            .universities()
            .iter()
            .map(|u| UniversityInfo {
                id: u.university_id.clone(),
                name: u.name.clone(),
                region: u.region,
                staff: u.academic_staff,
                researchers: counts.get(u.university_id.as_str()).copied().unwrap_or(0),
            })
            .collect();
        out.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }

    /// Citation overlay; `normalize` of `None` gives the raw sums.
    pub fn citations(
        &self,
        university: &str,
        mode: CitationMode,
        normalize: Option<NormalizeMode>,
        base: BaseSet,
    ) -> Result<OverlayResult, OverlayError> {
        match normalize {
            None => citations_overlay(&self.corpus, university, mode),
            Some(n) => normalized_citations_overlay(&self.corpus, university, base, mode, n),
        }
    }

    pub fn hr(&self, university: &str, base: BaseSet) -> Result<OverlayResult, OverlayError> {
        hr_overlay(&self.corpus, university, base)
    }

    pub fn department(&self, keyword: &str) -> Result<OverlayResult, OverlayError> {
        department_overlay(&self.corpus, keyword)
    }

    pub fn document(&self, text: &str) -> OverlayResult {
        document_overlay(text, &self.lexicon)
    }
}
