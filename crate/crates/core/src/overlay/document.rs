//! Candidate topic phrases from free text.

use std::collections::{BTreeMap, HashSet};
use std::sync::LazyLock;

use crate::ingest::strip_markup;
use crate::normalize::stem_word;

static STOPWORDS: LazyLock<HashSet<&'static str>> = LazyLock::new(|| {
    include_str!("../../data/stopwords.txt")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
});

pub fn is_stopword(word: &str) -> bool {
    STOPWORDS.contains(word)
}

/// Lowercased tokens of `text` after markup removal. Tokens are runs of
/// alphanumerics joined by single inner hyphens.
pub fn tokenize(text: &str) -> Vec<String> {
    let cleaned = strip_markup(text).to_lowercase();
    let mut out = Vec::new();
    for raw in cleaned.split(|c: char| !(c.is_alphanumeric() || c == '-')) {
        let pieces: Vec<&str> = raw.split('-').filter(|p| !p.is_empty()).collect();
        if !pieces.is_empty() {
            out.push(pieces.join("-"));
        }
    }
    out
}

/// Stemmed unigrams, bigrams and trigrams of consecutive non-stop-word tokens,
/// with their counts. The n-grams run over the filtered token sequence, so a
/// dropped stop-word joins its neighbours.
pub fn extract_document_terms(text: &str) -> BTreeMap<String, u32> {
    let stems: Vec<String> = tokenize(text)
        .into_iter()
        .filter(|t| !is_stopword(t))
        .map(|t| stem_word(&t))
        .collect();
    let mut counts = BTreeMap::new();
    for n in 1..=3 {
        for w in stems.windows(n) {
            *counts.entry(w.join(" ")).or_insert(0) += 1;
        }
    }
    counts
}
