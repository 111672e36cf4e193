use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::features::{FeatureVector, Featurizer};
use super::model::{LabelSet, TypingModel};
use crate::category::CategoryVocab;
use crate::error::{Error, Result};

pub const DEFAULT_LEARNING_RATE: f64 = 1.0;
pub const DEFAULT_EPOCHS: usize = 5;
pub const DEFAULT_BATCH_SIZE: usize = 64;

/// Mini-batch SGD settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2_penalty: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: DEFAULT_LEARNING_RATE,
            epochs: DEFAULT_EPOCHS,
            batch_size: DEFAULT_BATCH_SIZE,
            l2_penalty: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(
                "learning rate must be positive".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "batch size must be at least 1".into(),
            ));
        }
        if !(self.l2_penalty >= 0.0 && self.l2_penalty.is_finite()) {
            return Err(Error::InvalidArgument(
                "l2 penalty must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean per-example cross-entropy accumulated over the epoch's batches.
    pub train_loss: f64,
    /// Mean per-example cross-entropy on the dev set after the epoch.
    pub dev_loss: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
}

/// Mean per-example cross-entropy (no penalty).
pub fn mean_loss(model: &TypingModel, data: &[(FeatureVector, LabelSet)]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyInput("loss over an empty set"));
    }
    Ok(model.loss_and_grad(data, 0.0)?.data_loss / data.len() as f64)
}

/// Trains a typing model with mini-batch gradient descent.
///
/// Each epoch visits the examples in a fresh seeded permutation. A batch `B`
/// updates every parameter by `-(learning_rate / |B|) * g`, where `g` is the
/// gradient of the summed cross-entropy over `B` plus `l2_penalty * W`.
/// Rows are updated independently of each other, and the whole procedure is
/// deterministic for a given seed.
pub fn train(
    examples: &[(FeatureVector, LabelSet)],
    vocab: CategoryVocab,
    featurizer: Featurizer,
    config: &TrainConfig,
    dev: Option<&[(FeatureVector, LabelSet)]>,
) -> Result<(TypingModel, TrainReport)> {
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::EmptyInput("no training examples"));
    }
    if vocab.is_empty() {
        return Err(Error::EmptyInput("empty category vocabulary"));
    }
    let mut model = TypingModel::new(vocab, featurizer);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut report = TrainReport::default();
    let mut batch: Vec<(FeatureVector, LabelSet)> = Vec::with_capacity(config.batch_size);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| examples[i].clone()));
            let lg = model
                .loss_and_grad(&batch, config.l2_penalty)
                .map_err(|e| match e {
                    Error::Diverged(msg) => {
                        Error::Diverged(format!("epoch {epoch}, batch {b}: {msg}"))
                    }
                    other => other,
                })?;
            epoch_loss += lg.data_loss;
            model.apply_gradient(&lg.grad, config.learning_rate / batch.len() as f64);
        }
        let dev_loss = match dev {
            Some(d) if !d.is_empty() => Some(mean_loss(&model, d)?),
            _ => None,
        };
        let stats = EpochStats {
            epoch: epoch + 1,
            train_loss: epoch_loss / examples.len() as f64,
            dev_loss,
        };
        info!(
            "epoch {}: train loss {:.5}{}",
            stats.epoch,
            stats.train_loss,
            dev_loss.map_or(String::new(), |d| format!(", dev loss {d:.5}"))
        );
        report.epochs.push(stats);
    }
    Ok((model, report))
}
