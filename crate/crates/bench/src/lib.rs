//! Shared fixtures for the criterion benchmarks.

use et4el::linker::EntityCategoryIndex;
use et4el::prior::CandidateSet;
use et4el::typing::TypePosterior;

/// A posterior over `categories` types and `candidates` entities carrying
/// `per_entity` categories each, laid out with a fixed stride.
pub fn scoring_fixture(
    categories: usize,
    candidates: usize,
    per_entity: usize,
) -> (TypePosterior, CandidateSet, EntityCategoryIndex) {
    let probs = (0..categories)
        .map(|i| 0.01 + 0.98 * ((i * 7919) % 1000) as f64 / 1000.0)
        .collect();
    let mut index = EntityCategoryIndex::new();
    let mut cands = Vec::with_capacity(candidates);
    for c in 0..candidates {
        let name = format!("entity_{c}");
        let ids = (0..per_entity)
            .map(|k| ((c * 31 + k * 17) % categories) as u32)
            .collect();
        index.insert(name.clone(), ids);
        cands.push((name, 1.0 / (c + 1) as f64));
    }
    (
        TypePosterior { probs },
        CandidateSet::new("m", cands),
        index,
    )
}
