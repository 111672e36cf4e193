//! Hashed sparse features for a mention in context.
//!
//! Four namespaces, each a prefix on the hashed string. All text is
//! lowercased.
//!
//! | prefix          | content                                                        |
//! |-----------------|----------------------------------------------------------------|
//! | `ctx=`          | every context token outside the mention span                   |
//! | `win=<off>=`    | context tokens within 3 of the span; `<off>` is `-3..-1`, `+1..+3` |
//! | `men=`          | every mention token                                            |
//! | `chr=`          | character 3- and 4-grams of `^mention$`                        |
//!
//! Feature id = `mix64(fnv1a64(name) seeded) mod dim`; see [`hash_feature`].
//! Collisions are accepted. Repeated features accumulate counts.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::example::MentionExample;

/// Default hash-space size, 2^20.
pub const DEFAULT_DIM: u32 = 1 << 20;

const WINDOW: usize = 3;
const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Seeded 64-bit string hash: FNV-1a over the UTF-8 bytes starting from
/// `FNV_OFFSET ^ seed`, followed by the splitmix64 finalizer.
pub fn hash_feature(name: &str, seed: u64) -> u64 {
    let mut h = FNV_OFFSET ^ seed;
    for &b in name.as_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    let mut z = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureVector {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl FeatureVector {
    /// Builds from unsorted `(index, value)` pairs; duplicate indices are summed.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        for (i, v) in pairs {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite feature value at index {i}"
                )));
            }
            *acc.entry(i).or_insert(0.0) += v;
        }
        let (indices, values) = acc.into_iter().unzip();
        Ok(FeatureVector { indices, values })
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn max_index(&self) -> Option<u32> {
        self.indices.last().copied()
    }
}

/// Turns mention examples into hashed feature vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Featurizer {
    pub dim: u32,
    pub hash_seed: u64,
}

impl Featurizer {
    pub fn new(dim: u32, hash_seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "feature dimension must be positive".into(),
            ));
        }
        Ok(Featurizer { dim, hash_seed })
    }

    /// Namespaced feature strings before hashing, in generation order.
    pub fn feature_names(&self, ex: &MentionExample) -> Vec<String> {
        let lower: Vec<String> = ex.tokens.iter().map(|t| t.to_lowercase()).collect();
        let (start, end) = (ex.span.start, ex.span.end);
        let mut names = Vec::with_capacity(lower.len() * 2 + 16);

        for (i, tok) in lower.iter().enumerate() {
            if i < start || i >= end {
                names.push(format!("ctx={tok}"));
            }
        }
        for d in 1..=WINDOW {
            if let Some(i) = start.checked_sub(d) {
                names.push(format!("win=-{d}={}", lower[i]));
            }
            if let Some(tok) = lower.get(end + d - 1) {
                names.push(format!("win=+{d}={tok}"));
            }
        }
        let mention = &lower[start..end];
        for tok in mention {
            names.push(format!("men={tok}"));
        }
        let padded: Vec<char> = std::iter::once('^')
            .chain(mention.join(" ").chars())
            .chain(std::iter::once('$'))
            .collect();
        for n in [3, 4] {
            for gram in padded.windows(n) {
                names.push(format!("chr={}", gram.iter().collect::<String>()));
            }
        }
        names
    }

    pub fn index(&self, name: &str) -> u32 {
        (hash_feature(name, self.hash_seed) % u64::from(self.dim)) as u32
    }

    pub fn featurize(&self, ex: &MentionExample) -> FeatureVector {
        let pairs = self
            .feature_names(ex)
            .into_iter()
            .map(|n| (self.index(&n), 1.0));
        FeatureVector::from_pairs(pairs).expect("unit feature values are finite")
    }
}
