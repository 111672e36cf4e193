//! Mention-entity prior `p(e|m)` from anchor counts, and candidate generation.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default candidate clipping threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.05;

/// Anchor occurrence counts per mention string.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PriorTable {
    counts: HashMap<String, HashMap<String, u64>>,
    totals: HashMap<String, u64>,
}

impl PriorTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Counts every `(mention, entity)` occurrence in the stream.
    pub fn accumulate<I, M, E>(links: I) -> Self
    where
        I: IntoIterator<Item = (M, E)>,
        M: AsRef<str>,
        E: AsRef<str>,
    {
        let mut table = PriorTable::new();
        for (m, e) in links {
            table.add(m.as_ref(), e.as_ref(), 1);
        }
        table
    }

    /// Adds `count` occurrences; a zero count is ignored so that all stored
    /// counts stay positive.
    pub fn add(&mut self, mention: &str, entity: &str, count: u64) {
        if count == 0 {
            return;
        }
        let per = match self.counts.get_mut(mention) {
            Some(per) => per,
            None => self.counts.entry(mention.to_string()).or_default(),
        };
        match per.get_mut(entity) {
            Some(c) => *c += count,
            None => {
                per.insert(entity.to_string(), count);
            }
        }
        *self.totals.entry(mention.to_string()).or_insert(0) += count;
    }

    /// Associative, commutative merge.
    pub fn merge(mut self, other: PriorTable) -> Self {
        for (m, per) in other.counts {
            for (e, c) in per {
                self.add(&m, &e, c);
            }
        }
        self
    }

    pub fn count(&self, mention: &str, entity: &str) -> u64 {
        self.counts
            .get(mention)
            .and_then(|per| per.get(entity))
            .copied()
            .unwrap_or(0)
    }

    pub fn total(&self, mention: &str) -> u64 {
        self.totals.get(mention).copied().unwrap_or(0)
    }

    pub fn probability(&self, mention: &str, entity: &str) -> f64 {
        match self.total(mention) {
            0 => 0.0,
            t => self.count(mention, entity) as f64 / t as f64,
        }
    }

    pub fn num_mentions(&self) -> usize {
        self.counts.len()
    }

    pub fn contains_mention(&self, mention: &str) -> bool {
        self.counts.contains_key(mention)
    }

    /// Copy with lowercased mention keys; counts of colliding keys are summed.
    pub fn fold_case(&self) -> PriorTable {
        let mut out = PriorTable::new();
        for (m, per) in &self.counts {
            let folded = m.to_lowercase();
            for (e, c) in per {
                out.add(&folded, e, *c);
            }
        }
        out
    }

    /// All `(mention, entity, count)` triples sorted by mention then entity.
    pub fn triples(&self) -> Vec<(&str, &str, u64)> {
        let mut out: Vec<(&str, &str, u64)> = self
            .counts
            .iter()
            .flat_map(|(m, per)| per.iter().map(move |(e, c)| (m.as_str(), e.as_str(), *c)))
            .collect();
        out.sort_unstable();
        out
    }

    /// Entities whose prior is at least `threshold` (inclusive), ordered by
    /// probability descending then entity ascending. Unknown mentions yield an
    /// empty set.
    pub fn candidates(&self, mention: &str, threshold: f64) -> CandidateSet {
        let mut candidates = Vec::new();
        if let (Some(per), Some(&total)) = (self.counts.get(mention), self.totals.get(mention)) {
            let total = total as f64;
            candidates.extend(
                per.iter()
                    .map(|(e, &c)| (e.clone(), c as f64 / total))
                    .filter(|&(_, p)| p >= threshold),
            );
        }
        let mut set = CandidateSet {
            mention: mention.to_string(),
            candidates,
        };
        set.sort();
        set
    }
}

/// Candidate entities of one mention with their prior probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub mention: String,
    pub candidates: Vec<(String, f64)>,
}

impl CandidateSet {
    pub fn new(mention: impl Into<String>, candidates: Vec<(String, f64)>) -> Self {
        let mut set = CandidateSet {
            mention: mention.into(),
            candidates,
        };
        set.sort();
        set
    }

    fn sort(&mut self) {
        self.candidates
            .sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn contains(&self, entity: &str) -> bool {
        self.candidates.iter().any(|(e, _)| e == entity)
    }

    pub fn prior(&self, entity: &str) -> Option<f64> {
        self.candidates
            .iter()
            .find(|(e, _)| e == entity)
            .map(|(_, p)| *p)
    }

    pub fn entities(&self) -> impl Iterator<Item = &str> {
        self.candidates.iter().map(|(e, _)| e.as_str())
    }
}

/// Fraction of records whose candidate set contains the gold entity.
pub fn gold_recall<'a, I>(records: I) -> Result<f64>
where
    I: IntoIterator<Item = (&'a CandidateSet, &'a str)>,
{
    let (mut hits, mut n) = (0usize, 0usize);
    for (set, gold) in records {
        n += 1;
        if set.contains(gold) {
            hits += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyInput("gold recall needs at least one record"));
    }
    Ok(hits as f64 / n as f64)
}
