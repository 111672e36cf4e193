//! Candidate scoring from type posteriors, and the prior-only baseline.
//!
//! A candidate's score is the sum of the posteriors of the vocabulary
//! categories it carries. When those scores cannot separate the candidates
//! (too few categories on the winner, or a near tie) the prediction falls
//! back to the mention-entity prior.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::category::CategoryVocab;
use crate::error::{Error, Result};
use crate::ingest::ExpandedCategories;
use crate::prior::CandidateSet;
use crate::typing::TypePosterior;

pub const DEFAULT_BACKOFF_MIN_CATS: usize = 2;
pub const DEFAULT_TIE_EPS: f64 = 1e-9;

/// Entity → vocabulary category ids (sorted, unique).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntityCategoryIndex {
    by_entity: HashMap<String, Vec<u32>>,
}

impl EntityCategoryIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Expanded categories of every entity, restricted to `vocab`. Entities
    /// left with no category are kept with an empty set.
    pub fn build(categories: &ExpandedCategories, vocab: &CategoryVocab) -> Self {
        let by_entity = categories
            .iter()
            .map(|(e, cats)| (e.clone(), vocab.ids(cats.iter().map(String::as_str))))
            .collect();
        EntityCategoryIndex { by_entity }
    }

    pub fn insert(&mut self, entity: impl Into<String>, mut ids: Vec<u32>) {
        ids.sort_unstable();
        ids.dedup();
        self.by_entity.insert(entity.into(), ids);
    }

    pub fn get(&self, entity: &str) -> Option<&[u32]> {
        self.by_entity.get(entity).map(Vec::as_slice)
    }

    pub fn contains(&self, entity: &str) -> bool {
        self.by_entity.contains_key(entity)
    }

    /// Number of vocabulary categories of `entity`; zero when unindexed.
    pub fn num_categories(&self, entity: &str) -> usize {
        self.get(entity).map_or(0, <[u32]>::len)
    }

    pub fn len(&self) -> usize {
        self.by_entity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_entity.is_empty()
    }
}

/// How a candidate's categories are aggregated. Only `Sum` is the linking
/// rule; the others exist for ablations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringMode {
    #[default]
    Sum,
    Mean,
    LogOdds,
}

impl std::str::FromStr for ScoringMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(ScoringMode::Sum),
            "mean" => Ok(ScoringMode::Mean),
            "log_odds" | "log-odds" => Ok(ScoringMode::LogOdds),
            other => Err(Error::InvalidArgument(format!(
                "unknown scoring mode {other:?}"
            ))),
        }
    }
}

/// Scores every candidate as the sum of `t_i` over its category ids, summed
/// in ascending id order. Candidates missing from the index score 0.
pub fn score_candidates(
    t: &TypePosterior,
    candidates: &CandidateSet,
    index: &EntityCategoryIndex,
) -> Vec<(String, f64)> {
    score_candidates_with(ScoringMode::Sum, t, candidates, index)
}

pub fn score_candidates_with(
    mode: ScoringMode,
    t: &TypePosterior,
    candidates: &CandidateSet,
    index: &EntityCategoryIndex,
) -> Vec<(String, f64)> {
    candidates
        .entities()
        .map(|e| {
            let ids = index.get(e).unwrap_or(&[]);
            let score = match mode {
                ScoringMode::Sum => sum_probs(t, ids),
                ScoringMode::Mean if ids.is_empty() => 0.0,
                ScoringMode::Mean => sum_probs(t, ids) / ids.len() as f64,
                ScoringMode::LogOdds => ids
                    .iter()
                    .map(|&i| {
                        let p = t.probs[i as usize];
                        (p / (1.0 - p)).ln()
                    })
                    .sum(),
            };
            (e.to_string(), score)
        })
        .collect()
}

fn sum_probs(t: &TypePosterior, ids: &[u32]) -> f64 {
    ids.iter().map(|&i| t.probs[i as usize]).sum()
}

/// Number of candidates absent from the index.
pub fn unindexed_candidates(candidates: &CandidateSet, index: &EntityCategoryIndex) -> usize {
    candidates.entities().filter(|e| !index.contains(e)).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    /// Back off when the best-scoring candidate has fewer categories than this.
    pub backoff_min_cats: usize,
    /// Back off when the two best scores are within this distance.
    pub tie_eps: f64,
    pub scoring: ScoringMode,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            backoff_min_cats: DEFAULT_BACKOFF_MIN_CATS,
            tie_eps: DEFAULT_TIE_EPS,
            scoring: ScoringMode::Sum,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkPrediction {
    /// `(entity, score)`, best first.
    pub scores: Vec<(String, f64)>,
    pub chosen: String,
    pub used_backoff: bool,
}

fn by_prior(a: &(String, f64), b: &(String, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

/// Candidate with the highest prior; ties go to the smaller entity string.
pub fn most_frequent_entity(candidates: &CandidateSet) -> Result<String> {
    candidates
        .candidates
        .iter()
        .min_by(|a, b| by_prior(a, b))
        .map(|(e, _)| e.clone())
        .ok_or(Error::EmptyInput("candidate set is empty"))
}

/// Picks the candidate whose categories collect the most posterior mass.
///
/// Priors come from the candidate set. Ranking is score descending, then
/// prior descending, then entity ascending; the prior fallback applies when
/// the top candidate has fewer than `backoff_min_cats` categories or the top
/// two scores differ by at most `tie_eps`.
pub fn link(
    t: &TypePosterior,
    candidates: &CandidateSet,
    index: &EntityCategoryIndex,
    config: &LinkConfig,
) -> Result<LinkPrediction> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput("candidate set is empty"));
    }
    let mut ranked: Vec<(String, f64, f64)> =
        score_candidates_with(config.scoring, t, candidates, index)
            .into_iter()
            .zip(&candidates.candidates)
            .map(|((e, s), (_, p))| (e, s, *p))
            .collect();
    ranked.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| b.2.total_cmp(&a.2))
            .then_with(|| a.0.cmp(&b.0))
    });

    let top = &ranked[0];
    let sparse = index.num_categories(&top.0) < config.backoff_min_cats;
    let tied = ranked
        .get(1)
        .is_some_and(|second| top.1 - second.1 <= config.tie_eps);
    let (chosen, used_backoff) = if sparse || tied {
        (most_frequent_entity(candidates)?, true)
    } else {
        (top.0.clone(), false)
    };
    Ok(LinkPrediction {
        scores: ranked.into_iter().map(|(e, s, _)| (e, s)).collect(),
        chosen,
        used_backoff,
    })
}
