//! Overlays: per-topic values computed from the annotated corpus and drawn
//! on top of a basemap.
//!
//! All functions expect a corpus whose profiles carry canonical topics, as
//! returned by [`crate::normalize::canonicalize`].

mod document;

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ingest::{BaseSet, Corpus, ResearcherProfile};
use crate::normalize::TopicLexicon;
use crate::TopicId;

pub use document::{extract_document_terms, is_stopword, tokenize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum OverlayError {
    #[error("unknown university {0:?}")]
    UnknownUniversity(String),
    #[error("university {0:?} has no researchers")]
    EmptyUniversity(String),
    #[error("base set {0} has no researchers")]
    EmptyBase(BaseSet),
    #[error("keyword must not be empty")]
    EmptyKeyword,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OverlayKind {
    Citations,
    CitationsNormalized,
    HumanResources,
    Department,
    Document,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RenderHint {
    Heat,
    SignedCircles,
}

/// How a researcher's citations reach their topics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CitationMode {
    /// Every listed topic receives the full citation count.
    #[default]
    Full,
    /// Citations are split evenly over the listed topics.
    Split,
}

impl std::str::FromStr for CitationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "full" => Ok(CitationMode::Full),
            "split" => Ok(CitationMode::Split),
            _ => Err(format!(
                "unknown citation mode {s:?} (expected full or split)"
            )),
        }
    }
}

/// How topic citation sums are normalized against the base set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizeMode {
    /// `c_X(t) * (C / |T|) / c_base(t)`: divides out the field citation rate.
    #[default]
    Rate,
    /// `c_X(t) * c_base(t) / C`.
    Literal,
}

impl std::str::FromStr for NormalizeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rate" => Ok(NormalizeMode::Rate),
            "literal" => Ok(NormalizeMode::Literal),
            _ => Err(format!(
                "unknown normalization {s:?} (expected rate or literal)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OverlayMeta {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub university: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub keyword: Option<String>,
    /// SHA-256 of the document text.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub document_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub citation_mode: Option<CitationMode>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub normalize: Option<NormalizeMode>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub base_set: Option<BaseSet>,
    /// Researchers that contributed (at the university, matching the keyword).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub researchers: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

/// Per-topic overlay values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayResult {
    pub kind: OverlayKind,
    pub render_hint: RenderHint,
    pub meta: OverlayMeta,
    pub values: BTreeMap<TopicId, f64>,
}

impl OverlayResult {
    /// Drops values for topics outside `keep`.
    pub fn restrict_to(mut self, keep: &BTreeSet<TopicId>) -> Self {
        self.values.retain(|t, _| keep.contains(t));
        self
    }
}

fn university_profiles<'a>(
    corpus: &'a Corpus,
    university: &'a str,
) -> Result<Vec<&'a ResearcherProfile>, OverlayError> {
    if corpus.university(university).is_none() {
        return Err(OverlayError::UnknownUniversity(university.to_string()));
    }
    Ok(corpus.at_university(university).collect())
}

/// Exact per-topic citation sums over `profiles`.
pub fn citation_sums<'a>(
    profiles: impl IntoIterator<Item = &'a ResearcherProfile>,
    mode: CitationMode,
) -> BTreeMap<TopicId, BigRational> {
    let mut out: BTreeMap<TopicId, BigRational> = BTreeMap::new();
    for r in profiles {
        if r.topics.is_empty() {
            continue;
        }
        let share = match mode {
            CitationMode::Full => BigRational::from_integer(BigInt::from(r.total_citations)),
            CitationMode::Split => BigRational::new(
                BigInt::from(r.total_citations),
                BigInt::from(r.topics.len() as u64),
            ),
        };
        for &t in &r.topics {
            *out.entry(t).or_insert_with(BigRational::zero) += &share;
        }
    }
    out
}

fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Sum of citations per topic for the researchers at `university`.
pub fn citations_overlay(
    corpus: &Corpus,
    university: &str,
    mode: CitationMode,
) -> Result<OverlayResult, OverlayError> {
    let x = university_profiles(corpus, university)?;
    let values = citation_sums(x.iter().copied(), mode)
        .iter()
        .map(|(&t, q)| (t, to_f64(q)))
        .collect();
    Ok(OverlayResult {
        kind: OverlayKind::Citations,
        render_hint: RenderHint::Heat,
        meta: OverlayMeta {
            university: Some(university.to_string()),
            citation_mode: Some(mode),
            researchers: Some(x.len()),
            ..OverlayMeta::default()
        },
        values,
    })
}

/// Citation sums of `university` normalized by the citation totals of `base`.
///
/// `C` is the sum of the base topic sums and `T` the topics with base
/// citations. In rate mode topics without base citations are omitted with a
/// warning.
pub fn normalized_citations_overlay(
    corpus: &Corpus,
    university: &str,
    base: BaseSet,
    mode: CitationMode,
    normalize: NormalizeMode,
) -> Result<OverlayResult, OverlayError> {
    let x = university_profiles(corpus, university)?;
    let cx = citation_sums(x.iter().copied(), mode);
    let cbase = citation_sums(corpus.in_base(base), mode);
    let total: BigRational = cbase.values().fold(BigRational::zero(), |acc, q| acc + q);
    let topics = cbase.values().filter(|q| !q.is_zero()).count();

    let mut values = BTreeMap::new();
    let mut omitted = Vec::new();
    for (&t, c) in &cx {
        let b = cbase.get(&t).cloned().unwrap_or_else(BigRational::zero);
        let v = match normalize {
            NormalizeMode::Rate => {
                if b.is_zero() {
                    omitted.push(t);
                    continue;
                }
                c * &total / (BigRational::from_integer(BigInt::from(topics as u64)) * b)
            }
            NormalizeMode::Literal => {
                if total.is_zero() {
                    BigRational::zero()
                } else {
                    c * b / &total
                }
            }
        };
        values.insert(t, to_f64(&v));
    }
    let mut warnings = Vec::new();
    if !omitted.is_empty() {
        let list: Vec<String> = omitted.iter().map(ToString::to_string).collect();
        let msg = format!(
            "{} topics have no citations in base {base} and were omitted: {}",
            omitted.len(),
            list.join(", ")
        );
        tracing::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(OverlayResult {
        kind: OverlayKind::CitationsNormalized,
        render_hint: RenderHint::Heat,
        meta: OverlayMeta {
            university: Some(university.to_string()),
            citation_mode: Some(mode),
            normalize: Some(normalize),
            base_set: Some(base),
            researchers: Some(x.len()),
            warnings,
            ..OverlayMeta::default()
        },
        values,
    })
}

fn topic_shares<'a>(
    profiles: impl IntoIterator<Item = &'a ResearcherProfile>,
) -> (usize, BTreeMap<TopicId, usize>) {
    let mut n = 0;
    let mut counts = BTreeMap::new();
    for r in profiles {
        n += 1;
        for &t in &r.topics {
            *counts.entry(t).or_insert(0) += 1;
        }
    }
    (n, counts)
}

/// Percentage-point difference between the share of `x` and the share of
/// `base` listing each topic. Topics listed in either set are reported.
pub fn hr_values<'a, 'b>(
    x: impl IntoIterator<Item = &'a ResearcherProfile>,
    base: impl IntoIterator<Item = &'b ResearcherProfile>,
) -> Option<BTreeMap<TopicId, f64>> {
    let (nx, cx) = topic_shares(x);
    let (nb, cb) = topic_shares(base);
    if nx == 0 || nb == 0 {
        return None;
    }
    let pct = |c: usize, n: usize| 100.0 * c as f64 / n as f64;
    let topics: BTreeSet<TopicId> = cx.keys().chain(cb.keys()).copied().collect();
    Some(
        topics
            .into_iter()
            .map(|t| {
                let a = pct(cx.get(&t).copied().unwrap_or(0), nx);
                let b = pct(cb.get(&t).copied().unwrap_or(0), nb);
                (t, a - b)
            })
            .collect(),
    )
}

/// Human-resource strengths (positive) and weaknesses (negative) of
/// `university` relative to `base`.
pub fn hr_overlay(
    corpus: &Corpus,
    university: &str,
    base: BaseSet,
) -> Result<OverlayResult, OverlayError> {
    let x = university_profiles(corpus, university)?;
    if x.is_empty() {
        return Err(OverlayError::EmptyUniversity(university.to_string()));
    }
    let values =
        hr_values(x.iter().copied(), corpus.in_base(base)).ok_or(OverlayError::EmptyBase(base))?;
    Ok(OverlayResult {
        kind: OverlayKind::HumanResources,
        render_hint: RenderHint::SignedCircles,
        meta: OverlayMeta {
            university: Some(university.to_string()),
            base_set: Some(base),
            researchers: Some(x.len()),
            ..OverlayMeta::default()
        },
        values,
    })
}

/// Whether `keyword` occurs as a whole word in `affiliation`, ignoring case.
pub fn affiliation_matches(keyword: &str, affiliation: &str) -> bool {
    keyword_regex(keyword).is_some_and(|re| re.is_match(affiliation))
}

fn keyword_regex(keyword: &str) -> Option<regex::Regex> {
    let k = keyword.trim();
    if k.is_empty() {
        return None;
    }
    regex::RegexBuilder::new(&format!(r"\b{}\b", regex::escape(k)))
        .case_insensitive(true)
        .build()
        .ok()
}

/// Number of researchers with a matching affiliation listing each topic.
pub fn department_overlay(corpus: &Corpus, keyword: &str) -> Result<OverlayResult, OverlayError> {
    let re = keyword_regex(keyword).ok_or(OverlayError::EmptyKeyword)?;
    let matched: Vec<&ResearcherProfile> = corpus
        .profiles()
        .iter()
        .filter(|r| re.is_match(&r.affiliation))
        .collect();
    let (_, counts) = topic_shares(matched.iter().copied());
    Ok(OverlayResult {
        kind: OverlayKind::Department,
        render_hint: RenderHint::Heat,
        meta: OverlayMeta {
            keyword: Some(keyword.trim().to_string()),
            researchers: Some(matched.len()),
            ..OverlayMeta::default()
        },
        values: counts.into_iter().map(|(t, c)| (t, c as f64)).collect(),
    })
}

/// Term frequencies of the document's candidate phrases that stem-match a
/// lexicon topic.
pub fn document_overlay(text: &str, lexicon: &TopicLexicon) -> OverlayResult {
    let mut values: BTreeMap<TopicId, f64> = BTreeMap::new();
    for (phrase, count) in extract_document_terms(text) {
        if let Some(&t) = lexicon.stem_index().get(&phrase) {
            *values.entry(t).or_insert(0.0) += f64::from(count);
        }
    }
    let digest = Sha256::digest(text.as_bytes());
    OverlayResult {
        kind: OverlayKind::Document,
        render_hint: RenderHint::Heat,
        meta: OverlayMeta {
            document_digest: Some(hex(&digest)),
            ..OverlayMeta::default()
        },
        values,
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
