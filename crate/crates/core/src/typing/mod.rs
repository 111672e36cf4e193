//! Multi-label entity typing: a linear decoder with independent sigmoid
//! outputs over hashed mention/context features, trained with summed binary
//! cross-entropy.

mod features;
mod model;
mod train;

pub use features::{hash_feature, FeatureVector, Featurizer, DEFAULT_DIM};
pub use model::{
    sigmoid, Gradient, LabelSet, LossAndGrad, ModelFile, SparseRow, TypePosterior, TypingModel,
    MODEL_FORMAT, MODEL_FORMAT_VERSION,
};
pub use train::{
    mean_loss, train, EpochStats, TrainConfig, TrainReport, DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS,
    DEFAULT_LEARNING_RATE,
};
