//! The mention record shared by every stage of the pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Neighbouring-text window kept on each side of a sentence.
pub const EXTRA_CONTEXT_TOKENS: usize = 50;

/// Half-open token interval `[start, end)`. Serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn shift(self, by: usize) -> Self {
        Span::new(self.start + by, self.end + by)
    }
}

impl From<[usize; 2]> for Span {
    fn from([start, end]: [usize; 2]) -> Self {
        Span { start, end }
    }
}

impl From<Span> for [usize; 2] {
    fn from(span: Span) -> Self {
        [span.start, span.end]
    }
}

/// A mention span inside a tokenized sentence, optionally labeled with its
/// gold entity and category set.
///
/// Field order is the JSONL key order and must not change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MentionExample {
    pub mention: String,
    pub tokens: Vec<String>,
    pub span: Span,
    pub entity: Option<String>,
    pub categories: Option<Vec<String>>,
    pub doc_first_sentence: Option<Vec<String>>,
    pub left_extra: Option<Vec<String>>,
    pub right_extra: Option<Vec<String>>,
}

impl MentionExample {
    /// Builds an unlabeled example; the mention string is derived from the span.
    pub fn new(tokens: Vec<String>, span: Span) -> Result<Self> {
        if span.is_empty() || span.end > tokens.len() {
            return Err(Error::InvalidArgument(format!(
                "span [{}, {}) is not a non-empty interval within {} tokens",
                span.start,
                span.end,
                tokens.len()
            )));
        }
        let mention = tokens[span.start..span.end].join(" ");
        Ok(MentionExample {
            mention,
            tokens,
            span,
            entity: None,
            categories: None,
            doc_first_sentence: None,
            left_extra: None,
            right_extra: None,
        })
    }

    pub fn with_entity(mut self, entity: impl Into<String>) -> Self {
        self.entity = Some(entity.into());
        self
    }

    pub fn mention_tokens(&self) -> &[String] {
        &self.tokens[self.span.start..self.span.end]
    }

    /// Checks the record invariants; returns a description of the first violation.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let Span { start, end } = self.span;
        if start >= end || end > self.tokens.len() {
            return Err(format!(
                "span [{start}, {end}) is invalid for {} tokens",
                self.tokens.len()
            ));
        }
        let joined = self.tokens[start..end].join(" ");
        if joined != self.mention {
            return Err(format!(
                "mention {:?} does not match span tokens {:?}",
                self.mention, joined
            ));
        }
        if self.entity.is_none() && self.categories.is_some() {
            return Err("categories present without an entity".to_string());
        }
        Ok(())
    }
}

pub(crate) fn tokenize(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
}
