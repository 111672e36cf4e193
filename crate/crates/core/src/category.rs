//! Category expansion and category-vocabulary selection.
//!
//! Raw categories are mostly very specific ("Cities in New York (state)").
//! Splitting them at the first preposition yields more general labels
//! ("Cities") and a reusable relational phrase ("in New York (state)"),
//! while the original string is always retained.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};

/// Default vocabulary size.
pub const DEFAULT_VOCAB_SIZE: usize = 60_000;

const DEFAULT_PREPOSITIONS: [&str; 6] = ["in", "from", "for", "of", "by", "involving"];

/// Lowercase preposition words that trigger a category split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrepositionList {
    tokens: Vec<String>,
}

impl PrepositionList {
    /// Builds a list from arbitrary words: lowercased, duplicates removed,
    /// first occurrence order kept.
    pub fn new<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = HashSet::new();
        let mut tokens = Vec::new();
        for w in words {
            let w = w.as_ref().trim().to_lowercase();
            if !w.is_empty() && seen.insert(w.clone()) {
                tokens.push(w);
            }
        }
        if tokens.is_empty() {
            return Err(Error::InvalidArgument(
                "preposition list must not be empty".into(),
            ));
        }
        Ok(PrepositionList { tokens })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Whole-token, case-insensitive test. Surrounding brackets and
    /// punctuation are ignored so that "(of" still counts.
    pub fn matches(&self, token: &str) -> bool {
        let core = token.trim_matches(|c: char| !c.is_alphanumeric());
        !core.is_empty() && self.tokens.iter().any(|p| p.eq_ignore_ascii_case(core))
    }
}

impl Default for PrepositionList {
    fn default() -> Self {
        PrepositionList {
            tokens: DEFAULT_PREPOSITIONS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Expands one raw category.
///
/// Without a preposition the result is `{raw}`. Otherwise the category is
/// split at its first preposition token: every word to the left becomes a
/// category, the remainder (starting with the preposition) is kept verbatim as
/// one category, and `raw` itself is retained. A category that starts with a
/// preposition has nothing to the left and expands only to itself.
pub fn expand_category(raw: &str, preps: &PrepositionList) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    out.insert(raw.to_string());

    let mut words = Vec::new();
    for (offset, word) in word_offsets(raw) {
        if preps.matches(word) {
            if words.is_empty() {
                return out;
            }
            out.extend(words.into_iter().map(str::to_string));
            out.insert(raw[offset..].trim_end().to_string());
            return out;
        }
        words.push(word);
    }
    out
}

fn word_offsets(s: &str) -> impl Iterator<Item = (usize, &str)> {
    let base = s.as_ptr() as usize;
    s.split_whitespace()
        .map(move |w| (w.as_ptr() as usize - base, w))
}

/// Expands every raw category of one entity and unions the results.
pub fn expand_all<'a, I>(raw: I, preps: &PrepositionList) -> BTreeSet<String>
where
    I: IntoIterator<Item = &'a String>,
{
    raw.into_iter()
        .flat_map(|c| expand_category(c, preps))
        .collect()
}

/// Ordered category vocabulary; a category's id is its rank position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryVocab {
    entries: Vec<String>,
    index: HashMap<String, u32>,
}

impl CategoryVocab {
    pub fn new(entries: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if e.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "empty category at position {i}"
                )));
            }
            if index.insert(e.clone(), i as u32).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate category {e:?}")));
            }
        }
        Ok(CategoryVocab { entries, index })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn id(&self, category: &str) -> Option<u32> {
        self.index.get(category).copied()
    }

    pub fn get(&self, id: u32) -> Option<&str> {
        self.entries.get(id as usize).map(String::as_str)
    }

    pub fn contains(&self, category: &str) -> bool {
        self.index.contains_key(category)
    }

    /// Maps category strings to sorted, deduplicated ids, dropping unknowns.
    pub fn ids<'a, I>(&self, categories: I) -> Vec<u32>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut ids: Vec<u32> = categories.into_iter().filter_map(|c| self.id(c)).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// Mergeable map from category to the distinct mention strings whose
/// candidates carry that category.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MentionCategoryCounter {
    mentions: HashMap<String, HashSet<String>>,
}

impl MentionCategoryCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add<'a, I>(&mut self, mention: &str, categories: I)
    where
        I: IntoIterator<Item = &'a String>,
    {
        for c in categories {
            let set = self.mentions.entry(c.clone()).or_default();
            if !set.contains(mention) {
                set.insert(mention.to_string());
            }
        }
    }

    pub fn merge(mut self, other: MentionCategoryCounter) -> Self {
        for (cat, ms) in other.mentions {
            self.mentions.entry(cat).or_default().extend(ms);
        }
        self
    }

    pub fn count(&self, category: &str) -> usize {
        self.mentions.get(category).map_or(0, HashSet::len)
    }

    pub fn num_categories(&self) -> usize {
        self.mentions.len()
    }

    /// All categories ranked by unique-mention count, descending, ties by
    /// category string ascending.
    pub fn ranked(&self) -> Vec<(&str, usize)> {
        let mut ranked: Vec<(&str, usize)> = self
            .mentions
            .iter()
            .map(|(c, ms)| (c.as_str(), ms.len()))
            .collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked
    }

    /// Top `n` categories as a vocabulary.
    pub fn into_vocab(self, n: usize) -> Result<CategoryVocab> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "vocabulary size must be positive".into(),
            ));
        }
        let entries = self
            .ranked()
            .into_iter()
            .take(n)
            .map(|(c, _)| c.to_string())
            .collect();
        CategoryVocab::new(entries)
    }
}

/// Selects the `n` categories associated with the most distinct mentions.
///
/// Each item is `(mention, candidate entity, expanded categories of that
/// candidate)`; the entity only documents provenance and does not affect
/// counting.
pub fn select_vocabulary<'a, I>(items: I, n: usize) -> Result<CategoryVocab>
where
    I: IntoIterator<Item = (&'a str, &'a str, &'a BTreeSet<String>)>,
{
    if n == 0 {
        return Err(Error::InvalidArgument(
            "vocabulary size must be positive".into(),
        ));
    }
    let mut counter = MentionCategoryCounter::new();
    for (mention, _entity, cats) in items {
        counter.add(mention, cats);
    }
    counter.into_vocab(n)
}
