//! Linking accuracy, frequency-bucketed typing metrics, and context variants.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::category::CategoryVocab;
use crate::error::{Error, Result};
use crate::example::{MentionExample, EXTRA_CONTEXT_TOKENS};
use crate::typing::{LabelSet, TypePosterior};

pub const DEFAULT_TYPING_THRESHOLD: f64 = 0.5;

/// How much text around the mention sentence the typing model sees.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextMode {
    SentenceOnly,
    SentencePlusWindow50,
    #[default]
    SentencePlusFirstDocSentence,
}

impl ContextMode {
    pub const ALL: [ContextMode; 3] = [
        ContextMode::SentenceOnly,
        ContextMode::SentencePlusWindow50,
        ContextMode::SentencePlusFirstDocSentence,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ContextMode::SentenceOnly => "sentence_only",
            ContextMode::SentencePlusWindow50 => "sentence_plus_window50",
            ContextMode::SentencePlusFirstDocSentence => "sentence_plus_first_doc_sentence",
        }
    }
}

impl fmt::Display for ContextMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ContextMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ContextMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown context mode {s:?}")))
    }
}

/// Returns a copy of `example` whose tokens carry the extra context demanded
/// by `mode`, with the span shifted to match. Consumed auxiliary fields are
/// cleared so the result is not extended twice.
pub fn build_context(example: &MentionExample, mode: ContextMode) -> Result<MentionExample> {
    let mut out = example.clone();
    match mode {
        ContextMode::SentenceOnly => {}
        ContextMode::SentencePlusWindow50 => {
            let left = example
                .left_extra
                .as_ref()
                .ok_or(Error::MissingField("left_extra"))?;
            let right = example
                .right_extra
                .as_ref()
                .ok_or(Error::MissingField("right_extra"))?;
            let left = &left[left.len().saturating_sub(EXTRA_CONTEXT_TOKENS)..];
            let right = &right[..right.len().min(EXTRA_CONTEXT_TOKENS)];
            out.tokens = left
                .iter()
                .chain(&example.tokens)
                .chain(right)
                .cloned()
                .collect();
            out.span = example.span.shift(left.len());
            out.left_extra = None;
            out.right_extra = None;
        }
        ContextMode::SentencePlusFirstDocSentence => {
            let first = example
                .doc_first_sentence
                .as_ref()
                .ok_or(Error::MissingField("doc_first_sentence"))?;
            out.tokens = first.iter().chain(&example.tokens).cloned().collect();
            out.span = example.span.shift(first.len());
            out.doc_first_sentence = None;
        }
    }
    Ok(out)
}

/// Exact-match fraction of `(chosen, gold)` pairs. `None` never matches.
pub fn linking_accuracy<'a, I>(predictions: I) -> Result<f64>
where
    I: IntoIterator<Item = (Option<&'a str>, &'a str)>,
{
    let (mut hits, mut n) = (0usize, 0usize);
    for (chosen, gold) in predictions {
        n += 1;
        if chosen == Some(gold) {
            hits += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyInput("no predictions to score"));
    }
    Ok(hits as f64 / n as f64)
}

/// Inclusive range of 1-based vocabulary ranks; `last = None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankBucket {
    pub first: usize,
    pub last: Option<usize>,
}

impl RankBucket {
    pub fn contains(&self, rank: usize) -> bool {
        rank >= self.first && self.last.is_none_or(|l| rank <= l)
    }

    pub fn label(&self) -> String {
        match self.last {
            Some(l) => format!("{}-{}", self.first, l),
            None => format!("{}+", self.first),
        }
    }
}

/// Frequency groups 1-100, 101-500, 501-10000, 10001+.
pub fn default_buckets() -> Vec<RankBucket> {
    vec![
        RankBucket {
            first: 1,
            last: Some(100),
        },
        RankBucket {
            first: 101,
            last: Some(500),
        },
        RankBucket {
            first: 501,
            last: Some(10_000),
        },
        RankBucket {
            first: 10_001,
            last: None,
        },
    ]
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold positives.
    pub support: usize,
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Macro scores over one rank bucket: precision and recall are averaged over
/// the bucket's categories, and F1 is their harmonic mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketScores {
    pub label: String,
    /// Categories that entered the average.
    pub categories: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypingMetrics {
    pub threshold: f64,
    /// `"total"` first, then one row per bucket.
    pub buckets: Vec<BucketScores>,
    pub per_category: BTreeMap<String, CategoryScores>,
}

/// Per-category precision/recall/F1 with `t_i >= threshold` as the decision
/// rule, macro-averaged within rank buckets. Categories that are neither gold
/// nor predicted anywhere are left out of every average.
pub fn typing_metrics(
    predictions: &[TypePosterior],
    golds: &[LabelSet],
    vocab: &CategoryVocab,
    threshold: f64,
    buckets: &[RankBucket],
) -> Result<TypingMetrics> {
    if predictions.len() != golds.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions but {} gold label sets",
            predictions.len(),
            golds.len()
        )));
    }
    let n = vocab.len();
    let (mut tp, mut fp, mut fn_) = (vec![0usize; n], vec![0usize; n], vec![0usize; n]);
    let mut gold = vec![false; n];
    for (t, labels) in predictions.iter().zip(golds) {
        if t.len() != n {
            return Err(Error::InvalidArgument(format!(
                "posterior of length {} for a vocabulary of {n}",
                t.len()
            )));
        }
        gold.iter_mut().for_each(|g| *g = false);
        for &l in labels {
            *gold.get_mut(l as usize).ok_or_else(|| {
                Error::InvalidArgument(format!("label id {l} outside vocabulary"))
            })? = true;
        }
        for i in 0..n {
            match (t.probs[i] >= threshold, gold[i]) {
                (true, true) => tp[i] += 1,
                (true, false) => fp[i] += 1,
                (false, true) => fn_[i] += 1,
                (false, false) => {}
            }
        }
    }

    let mut per_category = BTreeMap::new();
    let mut active: Vec<(usize, CategoryScores)> = Vec::new();
    for i in 0..n {
        if tp[i] + fp[i] + fn_[i] == 0 {
            continue;
        }
        let p = if tp[i] + fp[i] == 0 {
            0.0
        } else {
            tp[i] as f64 / (tp[i] + fp[i]) as f64
        };
        let r = if tp[i] + fn_[i] == 0 {
            0.0
        } else {
            tp[i] as f64 / (tp[i] + fn_[i]) as f64
        };
        let s = CategoryScores {
            precision: p,
            recall: r,
            f1: f1(p, r),
            support: tp[i] + fn_[i],
        };
        per_category.insert(vocab.get(i as u32).unwrap_or_default().to_string(), s);
        active.push((i + 1, s));
    }

    let summarize = |label: String, rows: Vec<&CategoryScores>| {
        let k = rows.len();
        let (p, r) = if k == 0 {
            (0.0, 0.0)
        } else {
            (
                rows.iter().map(|s| s.precision).sum::<f64>() / k as f64,
                rows.iter().map(|s| s.recall).sum::<f64>() / k as f64,
            )
        };
        BucketScores {
            label,
            categories: k,
            precision: p,
            recall: r,
            f1: f1(p, r),
        }
    };

    let mut out = vec![summarize(
        "total".into(),
        active.iter().map(|(_, s)| s).collect(),
    )];
    for b in buckets {
        out.push(summarize(
            b.label(),
            active
                .iter()
                .filter(|(rank, _)| b.contains(*rank))
                .map(|(_, s)| s)
                .collect(),
        ));
    }
    Ok(TypingMetrics {
        threshold,
        buckets: out,
        per_category,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextAblationRow {
    pub mode: ContextMode,
    /// `None` when examples lack the fields this mode needs.
    pub accuracy: Option<f64>,
}

/// Everything the `eval` stage reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub examples: usize,
    pub linking_accuracy: f64,
    pub gold_recall: f64,
    pub backoff_rate: f64,
    /// Accuracy of always picking the highest-prior candidate.
    pub most_frequent_entity_accuracy: f64,
    pub typing: TypingMetrics,
    pub context_ablation: Vec<ContextAblationRow>,
}

impl EvalReport {
    /// Plain-text table.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let pct = |x: f64| format!("{:5.1}", 100.0 * x);
        s.push_str(&format!("examples                     {}\n", self.examples));
        s.push_str(&format!(
            "linking accuracy             {}\n",
            pct(self.linking_accuracy)
        ));
        s.push_str(&format!(
            "most frequent entity         {}\n",
            pct(self.most_frequent_entity_accuracy)
        ));
        s.push_str(&format!(
            "gold recall                  {}\n",
            pct(self.gold_recall)
        ));
        s.push_str(&format!(
            "prior backoff rate           {}\n",
            pct(self.backoff_rate)
        ));
        s.push_str(&format!(
            "\ntyping (threshold {})\n{:<12} {:>6} {:>6} {:>6} {:>6}\n",
            self.typing.threshold, "ranks", "cats", "P", "R", "F1"
        ));
        for b in &self.typing.buckets {
            s.push_str(&format!(
                "{:<12} {:>6} {:>6} {:>6} {:>6}\n",
                b.label,
                b.categories,
                pct(b.precision),
                pct(b.recall),
                pct(b.f1)
            ));
        }
        if !self.context_ablation.is_empty() {
            s.push_str("\ncontext\n");
            for row in &self.context_ablation {
                let acc = row.accuracy.map_or("  n/a".to_string(), pct);
                s.push_str(&format!("{:<34} {}\n", row.mode.as_str(), acc));
            }
        }
        s
    }
}
