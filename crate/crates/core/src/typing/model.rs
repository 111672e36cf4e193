use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::features::{FeatureVector, Featurizer};
use crate::category::CategoryVocab;
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "et4el-typing-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Category ids that apply to one example, strictly increasing.
pub type LabelSet = Vec<u32>;

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Per-category membership probabilities `t = sigmoid(W x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TypePosterior {
    pub probs: Vec<f64>,
}

impl TypePosterior {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Linear multi-label decoder over hashed features.
///
/// `W` has one row per vocabulary category and `dim` columns. It is stored
/// column-wise and sparsely: a column exists only for features that were
/// ever touched, every other weight is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TypingModel {
    featurizer: Featurizer,
    vocab: CategoryVocab,
    bias: Vec<f64>,
    columns: HashMap<u32, Vec<f64>>,
}

/// Gradient of the summed objective, in the same sparse column layout.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradient {
    pub bias: Vec<f64>,
    pub columns: BTreeMap<u32, Vec<f64>>,
}

/// Objective value split into its two terms.
#[derive(Debug, Clone, PartialEq)]
pub struct LossAndGrad {
    /// Summed binary cross-entropy over all examples and categories.
    pub data_loss: f64,
    /// `l2 / 2 * ||W||^2`.
    pub penalty: f64,
    pub grad: Gradient,
}

impl LossAndGrad {
    pub fn loss(&self) -> f64 {
        self.data_loss + self.penalty
    }
}

impl TypingModel {
    /// All-zero model.
    pub fn new(vocab: CategoryVocab, featurizer: Featurizer) -> Self {
        TypingModel {
            featurizer,
            bias: vec![0.0; vocab.len()],
            vocab,
            columns: HashMap::new(),
        }
    }

    pub fn vocab(&self) -> &CategoryVocab {
        &self.vocab
    }

    pub fn featurizer(&self) -> &Featurizer {
        &self.featurizer
    }

    pub fn num_categories(&self) -> usize {
        self.vocab.len()
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn set_bias(&mut self, category: u32, value: f64) {
        self.bias[category as usize] = value;
    }

    pub fn weight(&self, category: u32, feature: u32) -> f64 {
        self.columns
            .get(&feature)
            .map_or(0.0, |c| c[category as usize])
    }

    pub fn set_weight(&mut self, category: u32, feature: u32, value: f64) {
        let n = self.vocab.len();
        self.columns.entry(feature).or_insert_with(|| vec![0.0; n])[category as usize] = value;
    }

    /// Number of stored (touched) feature columns.
    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        let mut keys: Vec<&u32> = self.columns.keys().collect();
        keys.sort_unstable();
        keys.into_iter()
            .flat_map(|k| self.columns[k].iter())
            .map(|w| w * w)
            .sum()
    }

    /// `W x + b`. Each logit sums features in ascending index order, then adds
    /// the bias.
    pub fn logits(&self, x: &FeatureVector) -> Vec<f64> {
        let mut z = vec![0.0; self.vocab.len()];
        for (j, v) in x.iter() {
            if let Some(col) = self.columns.get(&j) {
                for (zi, w) in z.iter_mut().zip(col) {
                    *zi += w * v;
                }
            }
        }
        for (zi, b) in z.iter_mut().zip(&self.bias) {
            *zi += b;
        }
        z
    }

    pub fn predict(&self, x: &FeatureVector) -> TypePosterior {
        TypePosterior {
            probs: self.logits(x).into_iter().map(sigmoid).collect(),
        }
    }

    /// Multi-label binary cross-entropy over `batch` plus the L2 penalty, and
    /// its gradient. The gradient with respect to logit `i` is `t_i - y_i`.
    pub fn loss_and_grad(
        &self,
        batch: &[(FeatureVector, LabelSet)],
        l2_penalty: f64,
    ) -> Result<LossAndGrad> {
        let n = self.vocab.len();
        let mut grad = Gradient {
            bias: vec![0.0; n],
            columns: BTreeMap::new(),
        };
        let mut data_loss = 0.0;
        let mut y = vec![0.0; n];
        for (x, labels) in batch {
            if let Some(&bad) = labels.iter().find(|&&l| l as usize >= n) {
                return Err(Error::InvalidArgument(format!(
                    "label id {bad} outside vocabulary of {n}"
                )));
            }
            if x.max_index().is_some_and(|m| m >= self.featurizer.dim) {
                return Err(Error::InvalidArgument(
                    "feature index outside model dimension".into(),
                ));
            }
            y.iter_mut().for_each(|v| *v = 0.0);
            for &l in labels {
                y[l as usize] = 1.0;
            }
            let z = self.logits(x);
            let dz: Vec<f64> = z
                .iter()
                .zip(&y)
                .map(|(&zi, &yi)| {
                    data_loss += softplus(zi) - yi * zi;
                    sigmoid(zi) - yi
                })
                .collect();
            for (g, d) in grad.bias.iter_mut().zip(&dz) {
                *g += d;
            }
            for (j, v) in x.iter() {
                let col = grad.columns.entry(j).or_insert_with(|| vec![0.0; n]);
                for (g, d) in col.iter_mut().zip(&dz) {
                    *g += d * v;
                }
            }
        }
        let mut penalty = 0.0;
        if l2_penalty > 0.0 {
            penalty = 0.5 * l2_penalty * self.l2_norm_sq();
            for (j, w) in &self.columns {
                let col = grad.columns.entry(*j).or_insert_with(|| vec![0.0; n]);
                for (g, wi) in col.iter_mut().zip(w) {
                    *g += l2_penalty * wi;
                }
            }
        }
        if !(data_loss + penalty).is_finite() {
            return Err(Error::Diverged(format!(
                "loss {data_loss} + penalty {penalty} over {} examples",
                batch.len()
            )));
        }
        Ok(LossAndGrad {
            data_loss,
            penalty,
            grad,
        })
    }

    /// `params -= step * grad`.
    pub fn apply_gradient(&mut self, grad: &Gradient, step: f64) {
        for (b, g) in self.bias.iter_mut().zip(&grad.bias) {
            *b -= step * g;
        }
        let n = self.vocab.len();
        for (j, g) in &grad.columns {
            let col = self.columns.entry(*j).or_insert_with(|| vec![0.0; n]);
            for (w, gi) in col.iter_mut().zip(g) {
                *w -= step * gi;
            }
        }
    }

    pub fn to_file(&self) -> ModelFile {
        let n = self.vocab.len();
        let mut rows = vec![SparseRow::default(); n];
        let mut keys: Vec<u32> = self.columns.keys().copied().collect();
        keys.sort_unstable();
        for j in keys {
            for (i, &w) in self.columns[&j].iter().enumerate() {
                if w != 0.0 {
                    rows[i].indices.push(j);
                    rows[i].values.push(w);
                }
            }
        }
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            format_version: MODEL_FORMAT_VERSION,
            dim: self.featurizer.dim,
            hash_seed: self.featurizer.hash_seed,
            vocab: self.vocab.entries().to_vec(),
            bias: self.bias.clone(),
            weights: rows,
        }
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidModel(m));
        if file.format != MODEL_FORMAT {
            return bad(format!("unknown format {:?}", file.format));
        }
        if file.format_version != MODEL_FORMAT_VERSION {
            return bad(format!(
                "unsupported format version {}",
                file.format_version
            ));
        }
        let featurizer = Featurizer::new(file.dim, file.hash_seed)?;
        let vocab = CategoryVocab::new(file.vocab)?;
        let n = vocab.len();
        if file.bias.len() != n || file.weights.len() != n {
            return bad(format!(
                "vocab has {n} categories but bias has {} and weights {} rows",
                file.bias.len(),
                file.weights.len()
            ));
        }
        if file.bias.iter().any(|b| !b.is_finite()) {
            return bad("non-finite bias".into());
        }
        let mut model = TypingModel::new(vocab, featurizer);
        model.bias = file.bias;
        for (i, row) in file.weights.into_iter().enumerate() {
            if row.indices.len() != row.values.len() {
                return bad(format!("row {i}: indices and values differ in length"));
            }
            if row.indices.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("row {i}: indices not strictly increasing"));
            }
            for (j, w) in row.indices.into_iter().zip(row.values) {
                if j >= featurizer.dim || !w.is_finite() {
                    return bad(format!("row {i}: bad entry at feature {j}"));
                }
                model.set_weight(i as u32, j, w);
            }
        }
        Ok(model)
    }
}

/// On-disk model document (JSON). Rows of `W` are stored sparsely; omitted
/// entries are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub format_version: u32,
    pub dim: u32,
    pub hash_seed: u64,
    pub vocab: Vec<String>,
    pub bias: Vec<f64>,
    pub weights: Vec<SparseRow>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseRow {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}
