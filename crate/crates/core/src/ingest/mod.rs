//! Researcher-profile and university records.
//!
//! Profiles arrive as line-delimited JSON, one object per researcher:
//!
//! ```text
//! {"id":"r1","name":"Ada","uni":"u1","cites":100,"affiliation":"Professor of Biology","raw_topics":"ecology, evolution"}
//! ```
//!
//! Universities use the same style with keys `id`, `name`, `region` and `staff`.

mod synth;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::TopicId;

pub use synth::{
    synth_corpus, Field, Injection, InjectionKind, SynthCorpus, SynthSpec, Vocabulary,
    DESK_SCALE_PROFILES,
};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("line {}: {}", .0.line, .0.message)]
    Record(RecordError),
    #[error("duplicate university id {0:?}")]
    DuplicateUniversity(String),
    #[error("profile {researcher:?} references unknown university {university:?}")]
    UnknownUniversity {
        researcher: String,
        university: String,
    },
    #[error("duplicate researcher id {0:?}")]
    DuplicateResearcher(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A single rejected input line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorMode {
    /// Skip malformed records and report them.
    #[default]
    SkipAndReport,
    /// Abort on the first malformed record.
    Strict,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "UPPERCASE")]
pub enum Region {
    Us,
    Eu,
    #[default]
    Other,
}

impl Region {
    fn parse(s: &str) -> Option<Region> {
        match s.trim().to_ascii_uppercase().as_str() {
            "US" => Some(Region::Us),
            "EU" => Some(Region::Eu),
            "OTHER" | "" => Some(Region::Other),
            _ => None,
        }
    }
}

/// The set of universities a basemap or overlay base is computed over.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "UPPERCASE")]
pub enum BaseSet {
    #[default]
    World,
    Us,
    Eu,
}

impl BaseSet {
    pub fn contains(self, region: Region) -> bool {
        match self {
            BaseSet::World => true,
            BaseSet::Us => region == Region::Us,
            BaseSet::Eu => region == Region::Eu,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BaseSet::World => "WORLD",
            BaseSet::Us => "US",
            BaseSet::Eu => "EU",
        }
    }
}

impl fmt::Display for BaseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BaseSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "WORLD" => Ok(BaseSet::World),
            "US" => Ok(BaseSet::Us),
            "EU" => Ok(BaseSet::Eu),
            _ => Err(format!("unknown base set {s:?} (expected WORLD, US or EU)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResearcherProfile {
    pub researcher_id: String,
    pub name: String,
    pub university_id: String,
    pub total_citations: u64,
    pub affiliation: String,
    pub raw_topics: String,
    /// Canonical topics, filled in by normalization.
    pub topics: Vec<TopicId>,
}

impl ResearcherProfile {
    pub fn new(id: &str, university: &str, citations: u64, raw_topics: &str) -> Self {
        ResearcherProfile {
            researcher_id: id.to_string(),
            name: String::new(),
            university_id: university.to_string(),
            total_citations: citations,
            affiliation: String::new(),
            raw_topics: raw_topics.to_string(),
            topics: Vec::new(),
        }
    }

    pub fn with_affiliation(mut self, affiliation: &str) -> Self {
        self.affiliation = affiliation.to_string();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct University {
    pub university_id: String,
    pub name: String,
    pub region: Region,
    pub academic_staff: Option<u64>,
}

impl University {
    pub fn new(id: &str, name: &str, region: Region) -> Self {
        University {
            university_id: id.to_string(),
            name: name.to_string(),
            region,
            academic_staff: None,
        }
    }
}

/// Profiles together with the universities they reference.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    profiles: Vec<ResearcherProfile>,
    universities: Vec<University>,
    university_index: BTreeMap<String, usize>,
}

impl Corpus {
    /// Checks that researcher and university ids are unique and that every
    /// profile resolves to a university.
    pub fn new(
        profiles: Vec<ResearcherProfile>,
        universities: Vec<University>,
    ) -> Result<Self, IngestError> {
        let university_index = index_universities(&universities)?;
        let mut seen = HashSet::with_capacity(profiles.len());
        for p in &profiles {
            if !seen.insert(p.researcher_id.as_str()) {
                return Err(IngestError::DuplicateResearcher(p.researcher_id.clone()));
            }
            if !university_index.contains_key(&p.university_id) {
                return Err(IngestError::UnknownUniversity {
                    researcher: p.researcher_id.clone(),
                    university: p.university_id.clone(),
                });
            }
        }
        Ok(Corpus {
            profiles,
            universities,
            university_index,
        })
    }

    /// Like [`Corpus::new`], but drops profiles that fail the checks and
    /// returns their descriptions instead.
    pub fn new_lenient(
        profiles: Vec<ResearcherProfile>,
        universities: Vec<University>,
    ) -> Result<(Self, Vec<String>), IngestError> {
        let university_index = index_universities(&universities)?;
        let mut seen = HashSet::with_capacity(profiles.len());
        let mut dropped = Vec::new();
        let mut kept = Vec::with_capacity(profiles.len());
        for p in profiles {
            if !university_index.contains_key(&p.university_id) {
                dropped.push(format!(
                    "profile {:?} references unknown university {:?}",
                    p.researcher_id, p.university_id
                ));
            } else if !seen.insert(p.researcher_id.clone()) {
                dropped.push(format!("duplicate researcher id {:?}", p.researcher_id));
            } else {
                kept.push(p);
            }
        }
        Ok((
            Corpus {
                profiles: kept,
                universities,
                university_index,
            },
            dropped,
        ))
    }

    pub fn profiles(&self) -> &[ResearcherProfile] {
        &self.profiles
    }

    pub fn universities(&self) -> &[University] {
        &self.universities
    }

    pub fn university(&self, id: &str) -> Option<&University> {
        self.university_index
            .get(id)
            .map(|&i| &self.universities[i])
    }

    pub fn region_of(&self, profile: &ResearcherProfile) -> Region {
        self.university(&profile.university_id)
            .map(|u| u.region)
            .unwrap_or_default()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    /// Profiles whose university belongs to `base`.
    pub fn in_base(&self, base: BaseSet) -> impl Iterator<Item = &ResearcherProfile> {
        self.profiles
            .iter()
            .filter(move |p| base.contains(self.region_of(p)))
    }

    /// Profiles affiliated with university `id`.
    pub fn at_university<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a ResearcherProfile> {
        self.profiles.iter().filter(move |p| p.university_id == id)
    }

    /// A corpus restricted to the universities of `base`. Universities outside
    /// the base are dropped as well.
    pub fn restrict(&self, base: BaseSet) -> Corpus {
        let universities: Vec<University> = self
            .universities
            .iter()
            .filter(|u| base.contains(u.region))
            .cloned()
            .collect();
        let profiles = self.in_base(base).cloned().collect();
        let university_index = index_universities(&universities).expect("ids already unique");
        Corpus {
            profiles,
            universities,
            university_index,
        }
    }

    /// Replaces the profile list, keeping the universities. Used after
    /// annotation; ids and university references must be unchanged.
    pub(crate) fn with_profiles(&self, profiles: Vec<ResearcherProfile>) -> Corpus {
        Corpus {
            profiles,
            universities: self.universities.clone(),
            university_index: self.university_index.clone(),
        }
    }

    /// Writes the profiles in the line-delimited input format.
    pub fn write_profiles<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for p in &self.profiles {
            serde_json::to_writer(&mut out, &ProfileRecordOut::from(p))?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Writes the universities in the line-delimited input format.
    pub fn write_universities<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for u in &self.universities {
            serde_json::to_writer(&mut out, &UniversityRecord::from(u))?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn index_universities(universities: &[University]) -> Result<BTreeMap<String, usize>, IngestError> {
    let mut index = BTreeMap::new();
    for (i, u) in universities.iter().enumerate() {
        if index.insert(u.university_id.clone(), i).is_some() {
            return Err(IngestError::DuplicateUniversity(u.university_id.clone()));
        }
    }
    Ok(index)
}

#[derive(Deserialize)]
struct ProfileRecordIn {
    id: Option<Value>,
    #[serde(default)]
    name: Option<String>,
    uni: Option<Value>,
    #[serde(default)]
    cites: Option<Value>,
    #[serde(default)]
    affiliation: Option<String>,
    #[serde(default)]
    raw_topics: Option<String>,
}

#[derive(Serialize)]
struct ProfileRecordOut<'a> {
    id: &'a str,
    name: &'a str,
    uni: &'a str,
    cites: u64,
    affiliation: &'a str,
    raw_topics: &'a str,
}

impl<'a> From<&'a ResearcherProfile> for ProfileRecordOut<'a> {
    fn from(p: &'a ResearcherProfile) -> Self {
        ProfileRecordOut {
            id: &p.researcher_id,
            name: &p.name,
            uni: &p.university_id,
            cites: p.total_citations,
            affiliation: &p.affiliation,
            raw_topics: &p.raw_topics,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct UniversityRecord {
    id: String,
    #[serde(default)]
    name: String,
    #[serde(default)]
    region: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    staff: Option<u64>,
}

impl From<&University> for UniversityRecord {
    fn from(u: &University) -> Self {
        let region = match u.region {
            Region::Us => "US",
            Region::Eu => "EU",
            Region::Other => "OTHER",
        };
        UniversityRecord {
            id: u.university_id.clone(),
            name: u.name.clone(),
            region: Some(region.to_string()),
            staff: u.academic_staff,
        }
    }
}

/// Result of parsing a profile stream.
#[derive(Debug, Clone, Default)]
pub struct ParsedProfiles {
    pub profiles: Vec<ResearcherProfile>,
    pub errors: Vec<RecordError>,
}

/// Parses a line-delimited profile stream. Blank lines are ignored, unknown
/// keys are ignored, and `topics` is left empty.
pub fn parse_profiles<R: BufRead>(
    reader: R,
    mode: ErrorMode,
) -> Result<ParsedProfiles, IngestError> {
    let mut parsed = ParsedProfiles::default();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let result = parse_profile_line(&line).and_then(|p| {
            if seen.insert(p.researcher_id.clone()) {
                Ok(p)
            } else {
                Err(format!("duplicate researcher id {:?}", p.researcher_id))
            }
        });
        match result {
            Ok(p) => parsed.profiles.push(p),
            Err(message) => {
                let err = RecordError {
                    line: line_no,
                    message,
                };
                if mode == ErrorMode::Strict {
                    return Err(IngestError::Record(err));
                }
                tracing::warn!(line = err.line, "skipping profile record: {}", err.message);
                parsed.errors.push(err);
            }
        }
    }
    Ok(parsed)
}

fn parse_profile_line(line: &str) -> Result<ResearcherProfile, String> {
    let rec: ProfileRecordIn =
        serde_json::from_str(line).map_err(|e| format!("malformed record: {e}"))?;
    let researcher_id = id_field(rec.id, "id")?;
    let university_id = id_field(rec.uni, "uni")?;
    let total_citations = match rec.cites {
        None | Some(Value::Null) => 0,
        Some(v) => parse_citations(&v)?,
    };
    Ok(ResearcherProfile {
        researcher_id,
        name: rec.name.unwrap_or_default(),
        university_id,
        total_citations,
        affiliation: rec.affiliation.unwrap_or_default(),
        raw_topics: rec.raw_topics.unwrap_or_default(),
        topics: Vec::new(),
    })
}

fn id_field(v: Option<Value>, key: &str) -> Result<String, String> {
    match v {
        Some(Value::String(s)) if !s.is_empty() => Ok(s),
        Some(Value::Number(n)) => Ok(n.to_string()),
        _ => Err(format!("missing or empty {key:?}")),
    }
}

fn parse_citations(v: &Value) -> Result<u64, String> {
    let n: f64 = match v {
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                return Ok(u);
            }
            n.as_f64().ok_or("invalid citations")?
        }
        Value::String(s) => {
            let s = s.trim().replace(',', "");
            if let Ok(u) = s.parse::<u64>() {
                return Ok(u);
            }
            s.parse::<f64>()
                .map_err(|_| format!("invalid citations {s:?}"))?
        }
        _ => return Err("invalid citations".to_string()),
    };
    if n < 0.0 {
        Err("negative citations".to_string())
    } else if n.fract() != 0.0 || !n.is_finite() {
        Err(format!("invalid citations {n}"))
    } else {
        Ok(n as u64)
    }
}

/// Parses a line-delimited university stream. A missing region means
/// [`Region::Other`]; duplicate ids are an error in every mode.
pub fn load_universities<R: BufRead>(reader: R) -> Result<Vec<University>, IngestError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record_err = |message: String| {
            IngestError::Record(RecordError {
                line: i + 1,
                message,
            })
        };
        let rec: UniversityRecord = serde_json::from_str(&line)
            .map_err(|e| record_err(format!("malformed record: {e}")))?;
        if rec.id.is_empty() {
            return Err(record_err("missing or empty \"id\"".to_string()));
        }
        let region = match rec.region.as_deref() {
            None => Region::Other,
            Some(r) => {
                Region::parse(r).ok_or_else(|| record_err(format!("unknown region {r:?}")))?
            }
        };
        if !seen.insert(rec.id.clone()) {
            return Err(IngestError::DuplicateUniversity(rec.id));
        }
        out.push(University {
            university_id: rec.id,
            name: rec.name,
            region,
            academic_staff: rec.staff,
        });
    }
    Ok(out)
}

static MARKUP: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[^>]*>").unwrap());

/// Removes markup tags, replacing each with a space.
pub fn strip_markup(text: &str) -> String {
    MARKUP.replace_all(text, " ").into_owned()
}

/// Splits a raw topic field into cleaned, lowercase topic strings.
///
/// Markup tags are removed, the separators `/ ; . #` are treated like commas,
/// and each piece is trimmed of whitespace and control characters.
pub fn clean_topic_field(raw: &str) -> Vec<String> {
    let stripped = MARKUP.replace_all(raw, "");
    stripped
        .split([',', '/', ';', '.', '#'])
        .map(|piece| {
            piece
                .trim_matches(|c: char| c.is_whitespace() || c.is_control())
                .to_lowercase()
        })
        .filter(|piece| !piece.is_empty())
        .collect()
}
