//! Entity linking through fine-grained entity typing.
//!
//! A typing model predicts, for a mention in context, an independent
//! probability for each of a large set of categories derived from
//! Wikipedia-style category strings. Linking then picks, among the
//! candidates proposed by a mention-entity prior, the entity whose own
//! categories collect the most predicted probability mass.
//!
//! Modules follow the pipeline:
//!
//! * [`ingest`]: hyperlinked text to distantly labeled mention examples.
//! * [`category`]: category expansion and vocabulary selection.
//! * [`prior`]: anchor-count priors and candidate sets.
//! * [`typing`]: hashed features, the sigmoid decoder, and SGD training.
//! * [`linker`]: posterior-sum scoring with prior backoff.
//! * [`eval`]: accuracy, bucketed typing metrics, context variants.
//! * [`io`]: every file format.

pub mod category;
pub mod error;
pub mod eval;
pub mod example;
pub mod ingest;
pub mod io;
pub mod linker;
pub mod prior;
pub mod synth;
pub mod typing;

pub use category::{expand_category, select_vocabulary, CategoryVocab, PrepositionList};
pub use error::{Error, Result};
pub use eval::{build_context, ContextMode, EvalReport};
pub use example::{MentionExample, Span};
pub use linker::{
    link, most_frequent_entity, score_candidates, EntityCategoryIndex, LinkConfig, LinkPrediction,
};
pub use prior::{CandidateSet, PriorTable};
pub use typing::{FeatureVector, Featurizer, TrainConfig, TypePosterior, TypingModel};
