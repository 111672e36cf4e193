//! Seeded synthetic corpus with category-indicative context words.
//!
//! Every category owns a small private vocabulary of pseudo-words. A sentence
//! about an entity mixes filler words with a few words from each of the
//! entity's categories, so types are recoverable from context alone.
//!
//! Evaluation mentions use surface strings that never occur as training
//! anchors. Their anchor counts (shipped separately, in prior TSV format) are
//! skewed so the highest-prior candidate is the gold entity for only one
//! example in three.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::example::{MentionExample, Span};
use crate::ingest::RawArticle;
use crate::io;
use crate::prior::PriorTable;

const FILLER: [&str; 40] = [
    "the", "a", "was", "is", "in", "on", "and", "with", "that", "this", "it", "for", "at", "by",
    "from", "also", "which", "one", "its", "had", "has", "been", "were", "are", "first", "new",
    "after", "two", "some", "other", "more", "most", "many", "several", "later", "then", "known",
    "often", "where", "when",
];
const ONSETS: [&str; 16] = [
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "ch", "sh",
];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

/// Candidate anchor counts for an evaluation surface, highest first.
const SKEWED_COUNTS: [u64; 3] = [70, 20, 10];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub train_sentences: usize,
    pub categories: usize,
    pub entities: usize,
    pub categories_per_entity: usize,
    pub test_surfaces: usize,
    pub words_per_category: usize,
    pub sentences_per_article: usize,
    /// Chance that a sentence also contains a word of an unrelated category.
    pub noise_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            train_sentences: 5_000,
            categories: 50,
            entities: 400,
            categories_per_entity: 3,
            test_surfaces: 100,
            words_per_category: 12,
            sentences_per_article: 10,
            noise_rate: 0.2,
            seed: 13,
        }
    }
}

impl SynthConfig {
    /// Evaluation examples produced: one per candidate per surface.
    pub fn test_examples(&self) -> usize {
        self.test_surfaces * SKEWED_COUNTS.len()
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub articles: Vec<RawArticle>,
    /// `(entity, raw category)` pairs.
    pub categories: Vec<(String, String)>,
    /// Anchor counts for the evaluation surfaces.
    pub anchor_counts: PriorTable,
    pub test: Vec<MentionExample>,
}

pub const ARTICLES_FILE: &str = "articles.txt";
pub const CATEGORIES_FILE: &str = "categories.tsv";
pub const ANCHORS_FILE: &str = "anchors.tsv";
pub const TEST_FILE: &str = "test.jsonl";

impl SyntheticCorpus {
    pub fn write(&self, dir: &Path) -> Result<()> {
        io::write_articles(&dir.join(ARTICLES_FILE), &self.articles)?;
        io::write_categories(&dir.join(CATEGORIES_FILE), &self.categories)?;
        io::write_prior(&dir.join(ANCHORS_FILE), &self.anchor_counts)?;
        io::write_mentions(&dir.join(TEST_FILE), &self.test)
    }
}

fn pseudo_word(mut n: usize, syllables: usize) -> String {
    let mut s = String::new();
    for _ in 0..syllables {
        let k = n % (ONSETS.len() * VOWELS.len());
        n /= ONSETS.len() * VOWELS.len();
        s.push_str(ONSETS[k / VOWELS.len()]);
        s.push_str(VOWELS[k % VOWELS.len()]);
    }
    s
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

struct World {
    category_names: Vec<String>,
    category_words: Vec<Vec<String>>,
    entity_titles: Vec<String>,
    entity_categories: Vec<Vec<usize>>,
    /// Training anchor strings per entity.
    aliases: Vec<Vec<String>>,
}

impl World {
    fn sentence(&self, rng: &mut ChaCha8Rng, entity: usize, noise: f64) -> Vec<String> {
        let mut context: Vec<String> = (0..rng.gen_range(4..=6))
            .map(|_| FILLER.choose(rng).unwrap().to_string())
            .collect();
        for &c in &self.entity_categories[entity] {
            for w in self.category_words[c].choose_multiple(rng, 2) {
                context.push(w.clone());
            }
        }
        if rng.gen_bool(noise) {
            let c = rng.gen_range(0..self.category_words.len());
            context.push(self.category_words[c].choose(rng).unwrap().clone());
        }
        context.shuffle(rng);
        context
    }

    fn filler(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
        (0..n)
            .map(|_| FILLER.choose(rng).unwrap().to_string())
            .collect()
    }
}

/// Generates the corpus. Fails if the configuration cannot give every
/// evaluation surface category-disjoint candidates.
pub fn generate(config: &SynthConfig) -> Result<SyntheticCorpus> {
    if config.categories < config.categories_per_entity * SKEWED_COUNTS.len()
        || config.categories_per_entity < 2
        || config.entities < SKEWED_COUNTS.len()
        || config.sentences_per_article == 0
        || config.words_per_category < 2
    {
        return Err(Error::InvalidArgument(
            "synthetic configuration too small".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let category_names: Vec<String> = (0..config.categories)
        .map(|k| format!("Type {k:02}"))
        .collect();
    let category_words: Vec<Vec<String>> = (0..config.categories)
        .map(|k| {
            (0..config.words_per_category)
                .map(|j| pseudo_word(1_000 + k * config.words_per_category + j, 3))
                .collect()
        })
        .collect();
    let entity_titles: Vec<String> = (0..config.entities)
        .map(|i| format!("{}_{i}", capitalize(&pseudo_word(50_000 + i * 7, 3))))
        .collect();
    let all: Vec<usize> = (0..config.categories).collect();
    let entity_categories: Vec<Vec<usize>> = (0..config.entities)
        .map(|_| {
            let mut cs: Vec<usize> = all
                .choose_multiple(&mut rng, config.categories_per_entity)
                .copied()
                .collect();
            cs.sort_unstable();
            cs
        })
        .collect();
    let aliases: Vec<Vec<String>> = (0..config.entities)
        .map(|i| {
            let base = capitalize(&pseudo_word(200_000 + i * 3, 2));
            vec![
                base.clone(),
                format!("{base} {}", capitalize(&pseudo_word(300_000 + i, 2))),
            ]
        })
        .collect();
    let world = World {
        category_names,
        category_words,
        entity_titles,
        entity_categories,
        aliases,
    };

    let mut articles = Vec::new();
    let mut done = 0;
    while done < config.train_sentences {
        let title = world.entity_titles.choose(&mut rng).unwrap().clone();
        let mut lines = vec![format!("{} .", World::filler(&mut rng, 8).join(" "))];
        for _ in 0..config
            .sentences_per_article
            .min(config.train_sentences - done)
        {
            let e = rng.gen_range(0..config.entities);
            let alias = world.aliases[e].choose(&mut rng).unwrap();
            let mut words = world.sentence(&mut rng, e, config.noise_rate);
            let at = rng.gen_range(0..=words.len());
            words.insert(at, format!("[[{}|{alias}]]", world.entity_titles[e]));
            words.push(".".into());
            lines.push(words.join(" "));
            done += 1;
        }
        articles.push(RawArticle::new(title, lines.join("\n"))?);
    }

    let categories: Vec<(String, String)> = (0..config.entities)
        .flat_map(|e| {
            world.entity_categories[e]
                .iter()
                .map(|&c| {
                    (
                        world.entity_titles[e].clone(),
                        world.category_names[c].clone(),
                    )
                })
                .collect::<Vec<_>>()
        })
        .collect();

    let mut anchor_counts = PriorTable::new();
    let mut test = Vec::new();
    for s in 0..config.test_surfaces {
        let surface = format!(
            "{} {}",
            capitalize(&pseudo_word(400_000 + s, 2)),
            capitalize(&pseudo_word(500_000 + s, 2))
        );
        let mut picked: Vec<usize> = Vec::new();
        let mut used: BTreeSet<usize> = BTreeSet::new();
        let mut attempts = 0;
        while picked.len() < SKEWED_COUNTS.len() {
            attempts += 1;
            if attempts > 10_000 {
                return Err(Error::InvalidArgument(
                    "cannot find category-disjoint candidates; increase categories".into(),
                ));
            }
            let e = rng.gen_range(0..config.entities);
            let cats = &world.entity_categories[e];
            if picked.contains(&e) || cats.iter().any(|c| used.contains(c)) {
                continue;
            }
            used.extend(cats.iter().copied());
            picked.push(e);
        }
        for (&e, &count) in picked.iter().zip(SKEWED_COUNTS.iter()) {
            anchor_counts.add(&surface, &world.entity_titles[e], count);
        }
        for &gold in &picked {
            let mut words = world.sentence(&mut rng, gold, config.noise_rate);
            let at = rng.gen_range(0..=words.len());
            let mention: Vec<String> = surface.split(' ').map(str::to_string).collect();
            let span = Span::new(at, at + mention.len());
            words.splice(at..at, mention);
            words.push(".".into());
            let mut ex =
                MentionExample::new(words, span)?.with_entity(world.entity_titles[gold].clone());
            ex.doc_first_sentence = Some(World::filler(&mut rng, 8));
            ex.left_extra = Some(World::filler(&mut rng, 12));
            ex.right_extra = Some(World::filler(&mut rng, 12));
            test.push(ex);
        }
    }

    Ok(SyntheticCorpus {
        articles,
        categories,
        anchor_counts,
        test,
    })
}
