//! Distant supervision from hyperlinked text.
//!
//! Every well-formed internal link becomes one mention example: the anchor
//! text is the mention, the surrounding sentence its context, the link target
//! its entity, and (after [`attach_categories`]) the target's expanded
//! categories its type labels.
//!
//! Link grammar: `[[Target]]` or `[[Target|anchor]]`. Nesting is not
//! supported; an opening `[[` followed by another `[[` before its `]]` is
//! malformed and kept as literal text. Link boundaries are always token
//! boundaries, so `[[Ant]]s` tokenizes as `Ant s`.

use std::collections::{BTreeSet, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::category::{expand_all, CategoryVocab, PrepositionList};
use crate::error::{Error, Result};
use crate::example::{tokenize, MentionExample, Span, EXTRA_CONTEXT_TOKENS};

pub const DEFAULT_TRAIN_SIZE: usize = 6_000_000;
pub const DEFAULT_DEV_SIZE: usize = 10_000;

/// One article: a non-empty title and its raw marked-up body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawArticle {
    pub title: String,
    pub body: String,
}

impl RawArticle {
    pub fn new(title: impl Into<String>, body: impl Into<String>) -> Result<Self> {
        let title = title.into();
        if title.trim().is_empty() {
            return Err(Error::InvalidArgument("article title is empty".into()));
        }
        Ok(RawArticle {
            title,
            body: body.into(),
        })
    }
}

/// Raw categories of one entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryAssignment {
    pub entity: String,
    pub raw_categories: BTreeSet<String>,
}

/// One link occurrence inside a tokenized sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkOccurrence {
    pub mention: String,
    pub entity: String,
    pub tokens: Vec<String>,
    pub span: Span,
}

/// Shared counters; safe to bump from parallel workers.
#[derive(Debug, Default)]
pub struct Diagnostics {
    pub unclosed_links: AtomicU64,
    pub nested_links: AtomicU64,
    pub empty_targets: AtomicU64,
    pub empty_anchors: AtomicU64,
    pub missing_assignments: AtomicU64,
    pub empty_after_vocab: AtomicU64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DiagnosticsSnapshot {
    pub unclosed_links: u64,
    pub nested_links: u64,
    pub empty_targets: u64,
    pub empty_anchors: u64,
    pub missing_assignments: u64,
    pub empty_after_vocab: u64,
}

impl Diagnostics {
    fn bump(counter: &AtomicU64) {
        counter.fetch_add(1, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> DiagnosticsSnapshot {
        let get = |c: &AtomicU64| c.load(Ordering::Relaxed);
        DiagnosticsSnapshot {
            unclosed_links: get(&self.unclosed_links),
            nested_links: get(&self.nested_links),
            empty_targets: get(&self.empty_targets),
            empty_anchors: get(&self.empty_anchors),
            missing_assignments: get(&self.missing_assignments),
            empty_after_vocab: get(&self.empty_after_vocab),
        }
    }
}

/// A sentence with markup removed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedSentence {
    pub tokens: Vec<String>,
    /// `(span, target)` for every well-formed link, in text order.
    pub links: Vec<(Span, String)>,
}

/// Strips link markup from one sentence and records the link spans.
pub fn parse_sentence(text: &str, diag: &Diagnostics) -> ParsedSentence {
    let mut out = ParsedSentence::default();
    let mut pending = String::new();
    let mut rest = text;

    let flush = |pending: &mut String, tokens: &mut Vec<String>| {
        tokens.extend(tokenize(pending).map(str::to_string));
        pending.clear();
    };

    while let Some(open) = rest.find("[[") {
        pending.push_str(&rest[..open]);
        let after = &rest[open + 2..];
        let close = after.find("]]");
        let reopen = after.find("[[");
        match (close, reopen) {
            (None, _) => {
                Diagnostics::bump(&diag.unclosed_links);
                pending.push_str(&rest[open..]);
                rest = "";
                break;
            }
            (Some(c), Some(r)) if r < c => {
                Diagnostics::bump(&diag.nested_links);
                pending.push_str(&rest[open..open + 2 + r]);
                rest = &after[r..];
            }
            (Some(c), _) => {
                let inner = &after[..c];
                rest = &after[c + 2..];
                let (target, anchor) = inner.split_once('|').unwrap_or((inner, inner));
                let target = target.trim();
                if target.is_empty() {
                    Diagnostics::bump(&diag.empty_targets);
                    pending.push(' ');
                    pending.push_str(anchor);
                    pending.push(' ');
                    continue;
                }
                let anchor_tokens: Vec<&str> = tokenize(anchor).collect();
                if anchor_tokens.is_empty() {
                    Diagnostics::bump(&diag.empty_anchors);
                    continue;
                }
                flush(&mut pending, &mut out.tokens);
                let start = out.tokens.len();
                out.tokens
                    .extend(anchor_tokens.iter().map(|t| t.to_string()));
                out.links
                    .push((Span::new(start, out.tokens.len()), target.to_string()));
            }
        }
    }
    pending.push_str(rest);
    flush(&mut pending, &mut out.tokens);
    out
}

/// Splits a line after ". ", "! " or "? ", never inside link markup.
pub fn split_sentences(line: &str) -> Vec<&str> {
    let bytes = line.as_bytes();
    let mut out = Vec::new();
    let mut start = 0;
    let mut in_link = false;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i..].starts_with(b"[[") {
            in_link = true;
            i += 2;
            continue;
        }
        if bytes[i..].starts_with(b"]]") {
            in_link = false;
            i += 2;
            continue;
        }
        if !in_link && matches!(bytes[i], b'.' | b'!' | b'?') && bytes.get(i + 1) == Some(&b' ') {
            out.push(&line[start..=i]);
            start = i + 2;
            i += 2;
            continue;
        }
        i += 1;
    }
    if start < line.len() {
        out.push(&line[start..]);
    }
    out.retain(|s| !s.trim().is_empty());
    out
}

fn article_sentences(article: &RawArticle, split: bool, diag: &Diagnostics) -> Vec<ParsedSentence> {
    article
        .body
        .lines()
        .filter(|l| !l.trim().is_empty())
        .flat_map(|line| {
            if split {
                split_sentences(line)
            } else {
                vec![line]
            }
        })
        .map(|s| parse_sentence(s, diag))
        .filter(|p| !p.tokens.is_empty())
        .collect()
}

/// One output tuple per well-formed link in the article.
pub fn extract_links(article: &RawArticle, split: bool, diag: &Diagnostics) -> Vec<LinkOccurrence> {
    article_sentences(article, split, diag)
        .into_iter()
        .flat_map(|sentence| {
            let ParsedSentence { tokens, links } = sentence;
            links
                .into_iter()
                .map(|(span, entity)| LinkOccurrence {
                    mention: tokens[span.start..span.end].join(" "),
                    entity,
                    tokens: tokens.clone(),
                    span,
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Like [`extract_links`] but produces full mention examples, filling the
/// article's first sentence and up to 50 tokens of neighbouring text on each
/// side of the sentence.
pub fn article_examples(
    article: &RawArticle,
    split: bool,
    diag: &Diagnostics,
) -> Vec<MentionExample> {
    let sentences = article_sentences(article, split, diag);
    let Some(first) = sentences.first().map(|s| s.tokens.clone()) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (i, sentence) in sentences.iter().enumerate() {
        if sentence.links.is_empty() {
            continue;
        }
        let left: Vec<String> = sentences[..i]
            .iter()
            .rev()
            .flat_map(|s| s.tokens.iter().rev())
            .take(EXTRA_CONTEXT_TOKENS)
            .cloned()
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .collect();
        let right: Vec<String> = sentences[i + 1..]
            .iter()
            .flat_map(|s| s.tokens.iter())
            .take(EXTRA_CONTEXT_TOKENS)
            .cloned()
            .collect();
        for (span, entity) in &sentence.links {
            out.push(MentionExample {
                mention: sentence.tokens[span.start..span.end].join(" "),
                tokens: sentence.tokens.clone(),
                span: *span,
                entity: Some(entity.clone()),
                categories: None,
                doc_first_sentence: Some(first.clone()),
                left_extra: Some(left.clone()),
                right_extra: Some(right.clone()),
            });
        }
    }
    out
}

/// Entity → expanded category set, computed once per assignment table.
#[derive(Debug, Clone, Default)]
pub struct ExpandedCategories {
    by_entity: HashMap<String, BTreeSet<String>>,
}

impl ExpandedCategories {
    pub fn new(assignments: &HashMap<String, CategoryAssignment>, preps: &PrepositionList) -> Self {
        let by_entity = assignments
            .iter()
            .map(|(e, a)| (e.clone(), expand_all(&a.raw_categories, preps)))
            .collect();
        ExpandedCategories { by_entity }
    }

    pub fn get(&self, entity: &str) -> Option<&BTreeSet<String>> {
        self.by_entity.get(entity)
    }

    pub fn len(&self) -> usize {
        self.by_entity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_entity.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BTreeSet<String>)> {
        self.by_entity.iter()
    }

    /// Expanded categories of `entity` that are in `vocab`, in vocab order.
    pub fn in_vocab(&self, entity: &str, vocab: &CategoryVocab) -> Option<Vec<String>> {
        let cats = self.get(entity)?;
        let ids = vocab.ids(cats.iter().map(String::as_str));
        Some(
            ids.into_iter()
                .filter_map(|id| vocab.get(id).map(str::to_string))
                .collect(),
        )
    }
}

/// Labels each linked example with its entity's expanded, vocabulary-restricted
/// categories. Examples without an assignment record, or whose restricted set
/// is empty, are dropped and counted.
pub fn attach_categories(
    links: impl IntoIterator<Item = MentionExample>,
    categories: &ExpandedCategories,
    vocab: &CategoryVocab,
    diag: &Diagnostics,
) -> Vec<MentionExample> {
    links
        .into_iter()
        .filter_map(|mut ex| {
            let entity = ex.entity.as_deref()?;
            let Some(cats) = categories.in_vocab(entity, vocab) else {
                Diagnostics::bump(&diag.missing_assignments);
                return None;
            };
            if cats.is_empty() {
                Diagnostics::bump(&diag.empty_after_vocab);
                return None;
            }
            ex.categories = Some(cats);
            Some(ex)
        })
        .collect()
}

/// Draws disjoint uniform train and dev samples (without replacement) from a
/// stream using reservoir sampling. Deterministic for a given seed.
pub fn sample_training_set<T, I>(
    stream: I,
    n_train: usize,
    n_dev: usize,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)>
where
    I: IntoIterator<Item = T>,
{
    let want = n_train + n_dev;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reservoir: Vec<T> = Vec::with_capacity(want.min(1 << 20));
    let mut seen = 0usize;
    for item in stream {
        if reservoir.len() < want {
            reservoir.push(item);
        } else {
            let j = rng.gen_range(0..=seen);
            if j < want {
                reservoir[j] = item;
            }
        }
        seen += 1;
    }
    if seen < want {
        return Err(Error::InsufficientData {
            requested: want,
            available: seen,
        });
    }
    // Fisher-Yates so that the train/dev cut is itself uniform.
    for i in (1..reservoir.len()).rev() {
        let j = rng.gen_range(0..=i);
        reservoir.swap(i, j);
    }
    let dev = reservoir.split_off(n_train);
    Ok((reservoir, dev))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn article(body: &str) -> RawArticle {
        RawArticle::new("Doc", body).unwrap()
    }

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn piped_link() {
        let d = Diagnostics::default();
        let links = extract_links(&article("Install [[Apache Ant|Ant]] to build ."), false, &d);
        assert_eq!(
            links,
            vec![LinkOccurrence {
                mention: "Ant".into(),
                entity: "Apache Ant".into(),
                tokens: toks("Install Ant to build ."),
                span: Span::new(1, 2),
            }]
        );
    }

    #[test]
    fn no_links_no_tuples() {
        let d = Diagnostics::default();
        assert!(extract_links(&article("Plain text here ."), false, &d).is_empty());
    }

    #[test]
    fn two_links_one_sentence() {
        let d = Diagnostics::default();
        let links = extract_links(&article("[[A]] and [[B|b]]"), false, &d);
        assert_eq!(links.len(), 2);
        assert_eq!(links[0].mention, "A");
        assert_eq!(links[0].entity, "A");
        assert_eq!(links[1].mention, "b");
        assert_eq!(links[1].entity, "B");
        assert_eq!(links[0].tokens, links[1].tokens);
        assert_eq!(links[1].span, Span::new(2, 3));
    }

    #[test]
    fn multiword_anchor_and_glued_suffix() {
        let d = Diagnostics::default();
        let p = parse_sentence("Many [[Ant]]s live in [[New York City|New  York]].", &d);
        assert_eq!(p.tokens, toks("Many Ant s live in New York ."));
        assert_eq!(p.links[0], (Span::new(1, 2), "Ant".to_string()));
        assert_eq!(p.links[1], (Span::new(5, 7), "New York City".to_string()));
    }

    #[test]
    fn unclosed_link_is_literal_and_counted() {
        let d = Diagnostics::default();
        let p = parse_sentence("see [[A|a]] and [[broken link", &d);
        assert_eq!(p.links.len(), 1);
        assert_eq!(p.tokens, toks("see a and [[broken link"));
        assert_eq!(d.snapshot().unclosed_links, 1);
    }

    #[test]
    fn nested_link_skips_outer() {
        let d = Diagnostics::default();
        let p = parse_sentence("x [[Outer [[Inner]] tail]] y", &d);
        assert_eq!(p.links, vec![(Span::new(2, 3), "Inner".to_string())]);
        assert_eq!(p.tokens, toks("x [[Outer Inner tail]] y"));
        assert_eq!(d.snapshot().nested_links, 1);
    }

    #[test]
    fn empty_target_and_anchor_are_skipped() {
        let d = Diagnostics::default();
        let p = parse_sentence("a [[|shown]] b [[ ]] c [[T|  ]] d", &d);
        assert!(p.links.is_empty());
        assert_eq!(p.tokens, toks("a shown b c d"));
        let s = d.snapshot();
        assert_eq!(s.empty_targets, 2);
        assert_eq!(s.empty_anchors, 1);
    }

    #[test]
    fn split_mode_respects_links() {
        let parts = split_sentences("He met [[St. Louis|St. Louis]] fans. Then left! Why? ok");
        assert_eq!(
            parts,
            vec![
                "He met [[St. Louis|St. Louis]] fans.",
                "Then left!",
                "Why?",
                "ok"
            ]
        );
        let d = Diagnostics::default();
        let links = extract_links(&article("A [[X]] went. B [[Y]] came."), true, &d);
        assert_eq!(links.len(), 2);
        assert_eq!(links[1].tokens, toks("B Y came."));
    }

    #[test]
    fn article_examples_fill_context_fields() {
        let d = Diagnostics::default();
        let body = "Intro sentence here .\nThe [[Big Bang]] happened .\nLater text follows .";
        let ex = article_examples(&article(body), false, &d);
        assert_eq!(ex.len(), 1);
        let ex = &ex[0];
        assert!(ex.validate().is_ok());
        assert_eq!(
            ex.doc_first_sentence.as_deref(),
            Some(&toks("Intro sentence here .")[..])
        );
        assert_eq!(
            ex.left_extra.as_deref(),
            Some(&toks("Intro sentence here .")[..])
        );
        assert_eq!(
            ex.right_extra.as_deref(),
            Some(&toks("Later text follows .")[..])
        );
        assert_eq!(ex.mention, "Big Bang");
    }

    #[test]
    fn extra_context_is_capped() {
        let d = Diagnostics::default();
        let long: String = (0..80).map(|i| format!("w{i} ")).collect();
        let body = format!("{long}\n[[X]] mid\n{long}");
        let ex = &article_examples(&article(&body), false, &d)[0];
        let left = ex.left_extra.as_ref().unwrap();
        assert_eq!(left.len(), 50);
        assert_eq!(left[0], "w30");
        assert_eq!(left[49], "w79");
        let right = ex.right_extra.as_ref().unwrap();
        assert_eq!(right.len(), 50);
        assert_eq!(right[0], "w0");
    }

    fn assignments(pairs: &[(&str, &[&str])]) -> HashMap<String, CategoryAssignment> {
        pairs
            .iter()
            .map(|(e, cats)| {
                (
                    e.to_string(),
                    CategoryAssignment {
                        entity: e.to_string(),
                        raw_categories: cats.iter().map(|c| c.to_string()).collect(),
                    },
                )
            })
            .collect()
    }

    fn linked(entity: &str) -> MentionExample {
        MentionExample::new(toks("see it"), Span::new(1, 2))
            .unwrap()
            .with_entity(entity)
    }

    #[test]
    fn attaches_identity_category() {
        let cats =
            ExpandedCategories::new(&assignments(&[("A", &["Software"])]), &Default::default());
        let vocab = CategoryVocab::new(vec!["Software".into()]).unwrap();
        let d = Diagnostics::default();
        let out = attach_categories(vec![linked("A")], &cats, &vocab, &d);
        assert_eq!(out[0].categories, Some(vec!["Software".to_string()]));
    }

    #[test]
    fn attaches_expanded_categories() {
        let cats = ExpandedCategories::new(
            &assignments(&[("NYC", &["Cities in New York (state)"])]),
            &Default::default(),
        );
        let vocab = CategoryVocab::new(vec![
            "in New York (state)".into(),
            "Cities".into(),
            "Cities in New York (state)".into(),
            "Unrelated".into(),
        ])
        .unwrap();
        let d = Diagnostics::default();
        let out = attach_categories(vec![linked("NYC")], &cats, &vocab, &d);
        assert_eq!(
            out[0].categories.as_deref().unwrap(),
            [
                "in New York (state)",
                "Cities",
                "Cities in New York (state)"
            ]
        );
    }

    #[test]
    fn drops_out_of_vocab_and_unknown_entities() {
        let cats = ExpandedCategories::new(
            &assignments(&[("A", &["Towns in Kent"]), ("B", &["Software"])]),
            &Default::default(),
        );
        let vocab = CategoryVocab::new(vec!["Software".into()]).unwrap();
        let d = Diagnostics::default();
        let out = attach_categories(
            vec![linked("A"), linked("B"), linked("C")],
            &cats,
            &vocab,
            &d,
        );
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].entity.as_deref(), Some("B"));
        let s = d.snapshot();
        assert_eq!(s.empty_after_vocab, 1);
        assert_eq!(s.missing_assignments, 1);
    }

    #[test]
    fn exhaustive_split_is_a_partition() {
        let (train, dev) = sample_training_set(0..100, 90, 10, 7).unwrap();
        assert_eq!(train.len(), 90);
        assert_eq!(dev.len(), 10);
        let mut all: Vec<i32> = train.into_iter().chain(dev).collect();
        all.sort();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn sampling_is_seeded() {
        let a = sample_training_set(0..10_000, 500, 100, 1).unwrap();
        let b = sample_training_set(0..10_000, 500, 100, 1).unwrap();
        let c = sample_training_set(0..10_000, 500, 100, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn sampling_reports_shortfall() {
        match sample_training_set(0..5, 4, 2, 0) {
            Err(Error::InsufficientData {
                requested,
                available,
            }) => {
                assert_eq!((requested, available), (6, 5));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn link_count_is_conserved_and_spans_valid(
            pieces in proptest::collection::vec(
                prop_oneof![
                    "[a-z]{1,5}".prop_map(|w| (w, false)),
                    ("[A-Z][a-z]{0,4}", proptest::option::of("[a-z]{1,4}( [a-z]{1,4})?"))
                        .prop_map(|(t, a)| (match a {
                            Some(a) => format!("[[{t}|{a}]]"),
                            None => format!("[[{t}]]"),
                        }, true)),
                ],
                0..12,
            )
        ) {
            let expected = pieces.iter().filter(|(_, is_link)| *is_link).count();
            let body: Vec<String> = pieces.into_iter().map(|(s, _)| s).collect();
            let d = Diagnostics::default();
            let ex = article_examples(&article(&body.join(" ")), false, &d);
            prop_assert_eq!(ex.len(), expected);
            for e in &ex {
                prop_assert!(e.validate().is_ok());
            }
        }
    }
}
