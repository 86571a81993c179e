//! Topic canonicalization.
//!
//! Raw topic strings are cleaned, split at conjunctions, and merged in two
//! passes: forms with the same per-token stem are merged first, then groups
//! whose members share a fingerprint key (sorted, de-duplicated tokens) are
//! merged. Each merged group becomes one canonical topic named after its most
//! frequent raw spelling.

use std::collections::{BTreeMap, HashMap};
use std::sync::LazyLock;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

use crate::ingest::{clean_topic_field, Corpus};
use crate::TopicId;

static STEMMER: LazyLock<Stemmer> = LazyLock::new(|| Stemmer::create(Algorithm::English));

const CONJUNCTIONS: [&str; 3] = ["and", "or", "&"];

/// Splits a cleaned topic at standalone "and", "or" and "&" tokens.
pub fn split_topic(raw: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for token in raw.split_whitespace() {
        if CONJUNCTIONS.contains(&token) {
            if !current.is_empty() {
                out.push(current.join(" "));
                current.clear();
            }
        } else {
            current.push(token);
        }
    }
    if !current.is_empty() {
        out.push(current.join(" "));
    }
    out
}

/// Stems a single lowercase word.
pub fn stem_word(word: &str) -> String {
    STEMMER.stem(word).into_owned()
}

/// Stems each whitespace token independently and re-joins with single spaces.
pub fn stem_phrase(phrase: &str) -> String {
    phrase
        .split_whitespace()
        .map(|t| STEMMER.stem(t))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Key-collision fingerprint: lowercase, punctuation and control characters
/// become separators, tokens are de-duplicated and sorted.
pub fn fingerprint_key(phrase: &str) -> String {
    let lowered = phrase.to_lowercase();
    let cleaned: String = lowered
        .chars()
        .map(|c| {
            if c.is_ascii_punctuation()
                || c.is_control()
                || (!c.is_alphanumeric() && !c.is_whitespace())
            {
                ' '
            } else {
                c
            }
        })
        .collect();
    let mut tokens: Vec<&str> = cleaned.split_whitespace().collect();
    tokens.sort_unstable();
    tokens.dedup();
    tokens.join(" ")
}

/// Clean, split and de-duplicate one profile's raw topic field.
pub fn raw_topic_forms(raw_topics: &str) -> Vec<String> {
    let mut forms: Vec<String> = Vec::new();
    for piece in clean_topic_field(raw_topics) {
        for t in split_topic(&piece) {
            if !forms.contains(&t) {
                forms.push(t);
            }
        }
    }
    forms
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub name: String,
    /// Number of distinct profiles listing the topic (any merged spelling).
    pub frequency: u32,
    pub stem: String,
    pub fingerprint: String,
}

/// The canonical topic vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TopicLexicon {
    entries: Vec<LexiconEntry>,
    stem_index: BTreeMap<String, TopicId>,
    fingerprint_index: BTreeMap<String, TopicId>,
    name_index: HashMap<String, TopicId>,
    /// raw spelling -> topic, for annotation
    form_index: HashMap<String, TopicId>,
}

impl TopicLexicon {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = TopicId> + '_ {
        (0..self.entries.len() as u32).map(TopicId)
    }

    pub fn entry(&self, id: TopicId) -> Option<&LexiconEntry> {
        self.entries.get(id.index())
    }

    pub fn name(&self, id: TopicId) -> Option<&str> {
        self.entry(id).map(|e| e.name.as_str())
    }

    pub fn frequency(&self, id: TopicId) -> Option<u32> {
        self.entry(id).map(|e| e.frequency)
    }

    pub fn by_name(&self, name: &str) -> Option<TopicId> {
        self.name_index.get(name).copied()
    }

    /// Topic whose stem group contains the stemmed phrase.
    pub fn by_stem(&self, stemmed: &str) -> Option<TopicId> {
        self.stem_index.get(stemmed).copied()
    }

    pub fn by_fingerprint(&self, key: &str) -> Option<TopicId> {
        self.fingerprint_index.get(key).copied()
    }

    /// Topic a raw (cleaned, split) spelling was merged into.
    pub fn resolve(&self, raw_form: &str) -> Option<TopicId> {
        self.form_index
            .get(raw_form)
            .copied()
            .or_else(|| self.by_stem(&stem_phrase(raw_form)))
            .or_else(|| self.by_fingerprint(&fingerprint_key(raw_form)))
    }

    pub fn stem_index(&self) -> &BTreeMap<String, TopicId> {
        &self.stem_index
    }

    pub fn fingerprint_index(&self) -> &BTreeMap<String, TopicId> {
        &self.fingerprint_index
    }

    /// `{topic_id: {name, frequency, stem, fingerprint}}`
    pub fn export(&self) -> BTreeMap<TopicId, &LexiconEntry> {
        self.ids().zip(self.entries.iter()).collect()
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Builds the lexicon and returns a copy of the corpus whose profiles carry
/// canonical topic ids.
///
/// Raw spellings are merged when they share a stemmed phrase, and the
/// resulting stem groups are merged when any of their members share a
/// fingerprint key. The canonical name of a merged group is its most frequent
/// raw spelling (ties go to the lexicographically smallest). Topic ids are
/// assigned in canonical-name order.
pub fn canonicalize(corpus: &Corpus) -> (TopicLexicon, Corpus) {
    let per_profile: Vec<Vec<String>> = corpus
        .profiles()
        .iter()
        .map(|p| raw_topic_forms(&p.raw_topics))
        .collect();

    // raw spelling -> number of profiles listing it
    let mut form_freq: BTreeMap<&str, u32> = BTreeMap::new();
    for forms in &per_profile {
        for f in forms {
            *form_freq.entry(f.as_str()).or_default() += 1;
        }
    }
    let forms: Vec<&str> = form_freq.keys().copied().collect();
    let form_pos: HashMap<&str, usize> = forms.iter().enumerate().map(|(i, f)| (*f, i)).collect();
    let stems: Vec<String> = forms.iter().map(|f| stem_phrase(f)).collect();
    let prints: Vec<String> = forms.iter().map(|f| fingerprint_key(f)).collect();

    // stem groups first, then fingerprint collisions between groups
    let mut uf = UnionFind::new(forms.len());
    let mut first_by_stem: HashMap<&str, usize> = HashMap::new();
    for (i, s) in stems.iter().enumerate() {
        if let Some(&j) = first_by_stem.get(s.as_str()) {
            uf.union(i, j);
        } else {
            first_by_stem.insert(s, i);
        }
    }
    let mut first_by_print: HashMap<&str, usize> = HashMap::new();
    for (i, p) in prints.iter().enumerate() {
        if let Some(&j) = first_by_print.get(p.as_str()) {
            uf.union(i, j);
        } else {
            first_by_print.insert(p, i);
        }
    }

    // canonical representative per group
    let mut best: HashMap<usize, usize> = HashMap::new();
    for i in 0..forms.len() {
        let root = uf.find(i);
        let slot = best.entry(root).or_insert(i);
        let (fi, fb) = (form_freq[forms[i]], form_freq[forms[*slot]]);
        if fi > fb || (fi == fb && forms[i] < forms[*slot]) {
            *slot = i;
        }
    }
    let mut canon: Vec<(usize, usize)> = best.into_iter().collect();
    canon.sort_by(|a, b| forms[a.1].cmp(forms[b.1]));
    let root_to_id: HashMap<usize, TopicId> = canon
        .iter()
        .enumerate()
        .map(|(id, &(root, _))| (root, TopicId(id as u32)))
        .collect();

    let mut lexicon = TopicLexicon::default();
    for &(_, rep) in &canon {
        let name = forms[rep].to_string();
        lexicon.entries.push(LexiconEntry {
            stem: stems[rep].clone(),
            fingerprint: prints[rep].clone(),
            name,
            frequency: 0,
        });
    }
    for i in 0..forms.len() {
        let id = root_to_id[&uf.find(i)];
        lexicon.stem_index.insert(stems[i].clone(), id);
        lexicon.fingerprint_index.insert(prints[i].clone(), id);
        lexicon.form_index.insert(forms[i].to_string(), id);
    }
    for (id, e) in lexicon.entries.iter().enumerate() {
        lexicon
            .name_index
            .insert(e.name.clone(), TopicId(id as u32));
    }

    let mut profiles = corpus.profiles().to_vec();
    for (p, forms_of_p) in profiles.iter_mut().zip(&per_profile) {
        let mut topics = Vec::with_capacity(forms_of_p.len());
        for f in forms_of_p {
            let id = root_to_id[&uf.find(form_pos[f.as_str()])];
            if !topics.contains(&id) {
                topics.push(id);
            }
        }
        for &t in &topics {
            lexicon.entries[t.index()].frequency += 1;
        }
        p.topics = topics;
    }
    (lexicon, corpus.with_profiles(profiles))
}
