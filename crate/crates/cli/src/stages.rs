//! One function per pipeline stage. Every stage reads its inputs from files
//! and writes exactly its declared outputs.

use std::path::{Path, PathBuf};

use clap::Args;
use log::{info, warn};
use rayon::prelude::*;

use et4el::category::{MentionCategoryCounter, PrepositionList, DEFAULT_VOCAB_SIZE};
use et4el::eval::{
    build_context, default_buckets, linking_accuracy, typing_metrics, ContextAblationRow,
    ContextMode, EvalReport, DEFAULT_TYPING_THRESHOLD,
};
use et4el::ingest::{
    article_examples, attach_categories, sample_training_set, Diagnostics, ExpandedCategories,
    DEFAULT_DEV_SIZE, DEFAULT_TRAIN_SIZE,
};
use et4el::io::{self, PredictionRecord};
use et4el::linker::{
    link, most_frequent_entity, unindexed_candidates, EntityCategoryIndex, LinkConfig, ScoringMode,
    DEFAULT_BACKOFF_MIN_CATS, DEFAULT_TIE_EPS,
};
use et4el::prior::{gold_recall, CandidateSet, PriorTable, DEFAULT_THRESHOLD};
use et4el::typing::{
    self, FeatureVector, Featurizer, LabelSet, TrainConfig, TypingModel, DEFAULT_BATCH_SIZE,
    DEFAULT_DIM, DEFAULT_EPOCHS, DEFAULT_LEARNING_RATE,
};
use et4el::{synth, MentionExample};

use crate::error::{CliError, CliResult};

/// Links shard size for parallel prior accumulation.
const SHARD: usize = 4_096;

fn need<'a>(p: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    p.as_deref()
        .ok_or_else(|| CliError::usage(format!("missing required flag {flag}")))
}

fn read_categories(path: &Path) -> CliResult<ExpandedCategories> {
    let raw = io::read_categories(path)?;
    Ok(ExpandedCategories::new(&raw, &PrepositionList::default()))
}

fn read_model(path: &Path) -> CliResult<TypingModel> {
    if !path.exists() {
        return Err(CliError::new(
            "MODEL_NOT_FOUND",
            format!("model file not found: {}", path.display()),
        ));
    }
    Ok(io::read_model(path)?)
}

// ---------------------------------------------------------------- ingest

#[derive(Args, Debug, Clone, Default)]
pub struct IngestArgs {
    /// Article file to extract links from.
    #[arg(long)]
    pub articles: Option<PathBuf>,
    /// Extracted link examples: written when `--articles` is given, read otherwise.
    #[arg(long)]
    pub links: Option<PathBuf>,
    /// Split body lines on ". ", "! ", "? ".
    #[arg(long)]
    pub split: bool,
    /// Categories TSV; with `--vocab`, attaches category labels.
    #[arg(long)]
    pub categories: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Labeled training examples (requires `--vocab` and `--categories`).
    #[arg(long)]
    pub mentions: Option<PathBuf>,
}

pub fn ingest(args: &IngestArgs) -> CliResult<()> {
    let diag = Diagnostics::default();
    let links: Vec<MentionExample> = match &args.articles {
        Some(path) => {
            let articles = io::read_articles(path)?;
            let shards: Vec<Vec<MentionExample>> = articles
                .par_iter()
                .map(|a| article_examples(a, args.split, &diag))
                .collect();
            let links: Vec<MentionExample> = shards.into_iter().flatten().collect();
            info!(
                "extracted {} links from {} articles",
                links.len(),
                articles.len()
            );
            if let Some(out) = &args.links {
                io::write_mentions(out, &links)?;
            }
            links
        }
        None => io::read_mentions(need(&args.links, "--links")?)?,
    };

    match (&args.vocab, &args.mentions) {
        (Some(vocab), Some(out)) => {
            let vocab = io::read_vocab(vocab)?;
            let cats = read_categories(need(&args.categories, "--categories")?)?;
            let total = links.len();
            let labeled = attach_categories(links, &cats, &vocab, &diag);
            info!(
                "{} of {} links kept after category attachment",
                labeled.len(),
                total
            );
            io::write_mentions(out, &labeled)?;
        }
        (None, None) if args.articles.is_some() && args.links.is_some() => {}
        (None, None) => {
            return Err(CliError::usage(
                "nothing to write: give --articles with --links, or --vocab with --mentions",
            ))
        }
        _ => {
            return Err(CliError::usage(
                "--vocab and --mentions must be given together",
            ))
        }
    }
    let snap = diag.snapshot();
    if snap != Default::default() {
        warn!("ingest diagnostics: {snap:?}");
    }
    Ok(())
}

// ---------------------------------------------------------------- build-prior

#[derive(Args, Debug, Clone, Default)]
pub struct BuildPriorArgs {
    /// Link examples (mentions JSONL) to count.
    #[arg(long)]
    pub links: Option<PathBuf>,
    /// Extra anchor counts in prior TSV format, merged in.
    #[arg(long = "anchor-counts")]
    pub anchor_counts: Vec<PathBuf>,
    /// Output prior TSV.
    #[arg(long)]
    pub prior: Option<PathBuf>,
}

pub fn build_prior(args: &BuildPriorArgs) -> CliResult<()> {
    let out = need(&args.prior, "--prior")?;
    let mut table =
        match &args.links {
            Some(path) => {
                let links = io::read_mentions(path)?;
                links
                    .par_chunks(SHARD)
                    .map(|chunk| {
                        PriorTable::accumulate(chunk.iter().filter_map(|ex| {
                            ex.entity.as_deref().map(|e| (ex.mention.as_str(), e))
                        }))
                    })
                    .reduce(PriorTable::new, PriorTable::merge)
            }
            None => PriorTable::new(),
        };
    for extra in &args.anchor_counts {
        table = table.merge(io::read_prior(extra)?);
    }
    if args.links.is_none() && args.anchor_counts.is_empty() {
        return Err(CliError::usage("give --links and/or --anchor-counts"));
    }
    info!("prior covers {} mention strings", table.num_mentions());
    io::write_prior(out, &table)?;
    Ok(())
}

// ---------------------------------------------------------------- candidates

#[derive(Args, Debug, Clone)]
pub struct CandidateArgs {
    /// Prior TSV used for candidate generation and backoff.
    #[arg(long)]
    pub prior: Option<PathBuf>,
    /// Minimum prior for a candidate (inclusive).
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Precomputed candidate sets, one JSONL line per test example.
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    /// Match mention strings case-insensitively.
    #[arg(long)]
    pub fold_case: bool,
}

impl Default for CandidateArgs {
    fn default() -> Self {
        CandidateArgs {
            prior: None,
            threshold: DEFAULT_THRESHOLD,
            candidates: None,
            fold_case: false,
        }
    }
}

impl CandidateArgs {
    /// Candidate set for every test example, in order.
    fn load(&self, test: &[MentionExample]) -> CliResult<Vec<CandidateSet>> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(CliError::usage("--threshold must be within [0, 1]"));
        }
        if let Some(path) = &self.candidates {
            let sets = io::read_candidates(path)?;
            if sets.len() != test.len() {
                return Err(CliError::usage(format!(
                    "{} candidate sets for {} test examples",
                    sets.len(),
                    test.len()
                )));
            }
            return Ok(sets);
        }
        let mut table = io::read_prior(need(&self.prior, "--prior or --candidates")?)?;
        if self.fold_case {
            table = table.fold_case();
        }
        Ok(test
            .par_iter()
            .map(|ex| {
                if self.fold_case {
                    let mut set = table.candidates(&ex.mention.to_lowercase(), self.threshold);
                    set.mention = ex.mention.clone();
                    set
                } else {
                    table.candidates(&ex.mention, self.threshold)
                }
            })
            .collect())
    }
}

// ---------------------------------------------------------------- build-vocab

#[derive(Args, Debug, Clone)]
pub struct BuildVocabArgs {
    /// Unlabeled target examples whose candidates define the vocabulary.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub categories: Option<PathBuf>,
    #[command(flatten)]
    pub candidates: CandidateArgs,
    #[arg(long = "vocab-size", default_value_t = DEFAULT_VOCAB_SIZE)]
    pub vocab_size: usize,
    /// Output vocab file.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
}

impl Default for BuildVocabArgs {
    fn default() -> Self {
        BuildVocabArgs {
            test: None,
            categories: None,
            candidates: CandidateArgs::default(),
            vocab_size: DEFAULT_VOCAB_SIZE,
            vocab: None,
        }
    }
}

pub fn build_vocab(args: &BuildVocabArgs) -> CliResult<()> {
    let out = need(&args.vocab, "--vocab")?;
    let test = io::read_mentions(need(&args.test, "--test")?)?;
    let cats = read_categories(need(&args.categories, "--categories")?)?;
    let sets = args.candidates.load(&test)?;
    // Only mentions and their candidates' categories are used, never gold labels.
    let counter = test
        .par_iter()
        .zip(&sets)
        .fold(MentionCategoryCounter::new, |mut acc, (ex, set)| {
            for e in set.entities() {
                if let Some(c) = cats.get(e) {
                    acc.add(&ex.mention, c);
                }
            }
            acc
        })
        .reduce(MentionCategoryCounter::new, MentionCategoryCounter::merge);
    let vocab = counter.into_vocab(args.vocab_size)?;
    info!("selected {} categories", vocab.len());
    io::write_vocab(out, &vocab)?;
    Ok(())
}

// ---------------------------------------------------------------- train

#[derive(Args, Debug, Clone)]
pub struct TrainArgs {
    /// Labeled training examples.
    #[arg(long)]
    pub mentions: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Output model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long = "context-mode", default_value_t = ContextMode::default())]
    pub context_mode: ContextMode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Training sample size [default: min(6000000, available - dev)].
    #[arg(long = "n-train")]
    pub n_train: Option<usize>,
    /// Dev sample size [default: min(10000, available / 10)].
    #[arg(long = "n-dev")]
    pub n_dev: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_EPOCHS)]
    pub epochs: usize,
    #[arg(long = "learning-rate", default_value_t = DEFAULT_LEARNING_RATE)]
    pub learning_rate: f64,
    #[arg(long = "batch-size", default_value_t = DEFAULT_BATCH_SIZE)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.0)]
    pub l2: f64,
    /// Hash space size for features.
    #[arg(long, default_value_t = DEFAULT_DIM)]
    pub dim: u32,
    #[arg(long = "hash-seed", default_value_t = 0)]
    pub hash_seed: u64,
}

impl Default for TrainArgs {
    fn default() -> Self {
        let c = TrainConfig::default();
        TrainArgs {
            mentions: None,
            vocab: None,
            model: None,
            context_mode: ContextMode::default(),
            seed: 0,
            n_train: None,
            n_dev: None,
            epochs: c.epochs,
            learning_rate: c.learning_rate,
            batch_size: c.batch_size,
            l2: c.l2_penalty,
            dim: DEFAULT_DIM,
            hash_seed: 0,
        }
    }
}

fn labeled_example(
    i: usize,
    ex: &MentionExample,
    vocab: &et4el::CategoryVocab,
    mode: ContextMode,
    featurizer: &Featurizer,
) -> CliResult<(FeatureVector, LabelSet)> {
    let cats = ex
        .categories
        .as_ref()
        .ok_or_else(|| CliError::usage(format!("training example {i} has no categories")))?;
    let mut labels = Vec::with_capacity(cats.len());
    for c in cats {
        labels.push(vocab.id(c).ok_or_else(|| {
            CliError::usage(format!(
                "training example {i}: category {c:?} is not in the vocabulary"
            ))
        })?);
    }
    labels.sort_unstable();
    labels.dedup();
    let ctx = build_context(ex, mode)?;
    Ok((featurizer.featurize(&ctx), labels))
}

pub fn train(args: &TrainArgs) -> CliResult<()> {
    let out = need(&args.model, "--model")?;
    let examples = io::read_mentions(need(&args.mentions, "--mentions")?)?;
    let vocab = io::read_vocab(need(&args.vocab, "--vocab")?)?;
    let featurizer = Featurizer::new(args.dim, args.hash_seed)?;
    let config = TrainConfig {
        learning_rate: args.learning_rate,
        epochs: args.epochs,
        batch_size: args.batch_size,
        l2_penalty: args.l2,
        seed: args.seed,
    };
    config.validate()?;

    let available = examples.len();
    let n_dev = args.n_dev.unwrap_or(DEFAULT_DEV_SIZE.min(available / 10));
    let n_train = args
        .n_train
        .unwrap_or(DEFAULT_TRAIN_SIZE.min(available.saturating_sub(n_dev)));
    let (train_set, dev_set) =
        sample_training_set(examples.into_iter().enumerate(), n_train, n_dev, args.seed)?;

    let featurize =
        |set: Vec<(usize, MentionExample)>| -> CliResult<Vec<(FeatureVector, LabelSet)>> {
            set.par_iter()
                .map(|(i, ex)| labeled_example(*i, ex, &vocab, args.context_mode, &featurizer))
                .collect()
        };
    let train_data = featurize(train_set)?;
    let dev_data = featurize(dev_set)?;
    info!(
        "training on {} examples, {} dev",
        train_data.len(),
        dev_data.len()
    );
    let (model, _report) = typing::train(
        &train_data,
        vocab.clone(),
        featurizer,
        &config,
        Some(&dev_data),
    )?;
    io::write_model(out, &model)?;
    Ok(())
}

// ---------------------------------------------------------------- link

#[derive(Args, Debug, Clone)]
pub struct LinkArgs {
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub categories: Option<PathBuf>,
    #[command(flatten)]
    pub candidates: CandidateArgs,
    #[arg(long = "context-mode", default_value_t = ContextMode::default())]
    pub context_mode: ContextMode,
    #[arg(long = "backoff-min-cats", default_value_t = DEFAULT_BACKOFF_MIN_CATS)]
    pub backoff_min_cats: usize,
    #[arg(long = "tie-eps", default_value_t = DEFAULT_TIE_EPS)]
    pub tie_eps: f64,
    /// Candidate aggregation: sum, mean, log_odds.
    #[arg(long, default_value = "sum")]
    pub scoring: ScoringMode,
    /// Output predictions JSONL.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

impl Default for LinkArgs {
    fn default() -> Self {
        LinkArgs {
            test: None,
            model: None,
            categories: None,
            candidates: CandidateArgs::default(),
            context_mode: ContextMode::default(),
            backoff_min_cats: DEFAULT_BACKOFF_MIN_CATS,
            tie_eps: DEFAULT_TIE_EPS,
            scoring: ScoringMode::Sum,
            predictions: None,
        }
    }
}

/// Everything needed to link one example.
pub struct Linker {
    pub model: TypingModel,
    pub index: EntityCategoryIndex,
    pub config: LinkConfig,
}

impl Linker {
    pub fn posterior(
        &self,
        ex: &MentionExample,
        mode: ContextMode,
    ) -> CliResult<typing::TypePosterior> {
        let ctx = build_context(ex, mode)?;
        Ok(self.model.predict(&self.model.featurizer().featurize(&ctx)))
    }

    pub fn predict(
        &self,
        ex: &MentionExample,
        set: &CandidateSet,
        mode: ContextMode,
    ) -> CliResult<PredictionRecord> {
        let t = self.posterior(ex, mode)?;
        if set.is_empty() {
            return Ok(PredictionRecord {
                mention: ex.mention.clone(),
                chosen: None,
                used_backoff: false,
                scores: Vec::new(),
            });
        }
        let p = link(&t, set, &self.index, &self.config)?;
        Ok(PredictionRecord {
            mention: ex.mention.clone(),
            chosen: Some(p.chosen),
            used_backoff: p.used_backoff,
            scores: p.scores,
        })
    }

    pub fn predict_all(
        &self,
        test: &[MentionExample],
        sets: &[CandidateSet],
        mode: ContextMode,
    ) -> CliResult<Vec<PredictionRecord>> {
        test.par_iter()
            .zip(sets)
            .map(|(ex, set)| self.predict(ex, set, mode))
            .collect()
    }
}

fn load_linker(model: &Path, categories: &Path, config: LinkConfig) -> CliResult<Linker> {
    let model = read_model(model)?;
    let cats = read_categories(categories)?;
    let index = EntityCategoryIndex::build(&cats, model.vocab());
    Ok(Linker {
        model,
        index,
        config,
    })
}

pub fn link_stage(args: &LinkArgs) -> CliResult<()> {
    let out = need(&args.predictions, "--predictions")?;
    let test = io::read_mentions(need(&args.test, "--test")?)?;
    let config = LinkConfig {
        backoff_min_cats: args.backoff_min_cats,
        tie_eps: args.tie_eps,
        scoring: args.scoring,
    };
    let linker = load_linker(
        need(&args.model, "--model")?,
        need(&args.categories, "--categories")?,
        config,
    )?;
    let sets = args.candidates.load(&test)?;
    let unindexed: usize = sets
        .iter()
        .map(|s| unindexed_candidates(s, &linker.index))
        .sum();
    if unindexed > 0 {
        warn!("{unindexed} candidates have no category record and score 0");
    }
    let preds = linker.predict_all(&test, &sets, args.context_mode)?;
    io::write_jsonl(out, &preds)?;
    Ok(())
}

// ---------------------------------------------------------------- eval

#[derive(Args, Debug, Clone)]
pub struct EvalArgs {
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub categories: Option<PathBuf>,
    #[command(flatten)]
    pub candidates: CandidateArgs,
    #[arg(long = "context-mode", default_value_t = ContextMode::default())]
    pub context_mode: ContextMode,
    #[arg(long = "backoff-min-cats", default_value_t = DEFAULT_BACKOFF_MIN_CATS)]
    pub backoff_min_cats: usize,
    #[arg(long = "tie-eps", default_value_t = DEFAULT_TIE_EPS)]
    pub tie_eps: f64,
    #[arg(long = "typing-threshold", default_value_t = DEFAULT_TYPING_THRESHOLD)]
    pub typing_threshold: f64,
    /// Also relink under every context mode.
    #[arg(long = "ablate-context")]
    pub ablate_context: bool,
    /// Machine-readable report (JSON).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Human-readable report; printed to stdout when absent.
    #[arg(long = "report-text")]
    pub report_text: Option<PathBuf>,
}

impl Default for EvalArgs {
    fn default() -> Self {
        EvalArgs {
            test: None,
            predictions: None,
            model: None,
            categories: None,
            candidates: CandidateArgs::default(),
            context_mode: ContextMode::default(),
            backoff_min_cats: DEFAULT_BACKOFF_MIN_CATS,
            tie_eps: DEFAULT_TIE_EPS,
            typing_threshold: DEFAULT_TYPING_THRESHOLD,
            ablate_context: false,
            report: None,
            report_text: None,
        }
    }
}

pub fn evaluate(args: &EvalArgs) -> CliResult<EvalReport> {
    let test = io::read_mentions(need(&args.test, "--test")?)?;
    let preds: Vec<PredictionRecord> = io::read_jsonl(need(&args.predictions, "--predictions")?)?;
    if preds.len() != test.len() {
        return Err(CliError::usage(format!(
            "{} predictions for {} test examples",
            preds.len(),
            test.len()
        )));
    }
    if let Some(i) = preds
        .iter()
        .zip(&test)
        .position(|(p, t)| p.mention != t.mention)
    {
        return Err(CliError::usage(format!(
            "prediction {i} does not match its test example"
        )));
    }
    let config = LinkConfig {
        backoff_min_cats: args.backoff_min_cats,
        tie_eps: args.tie_eps,
        ..Default::default()
    };
    let linker = load_linker(
        need(&args.model, "--model")?,
        need(&args.categories, "--categories")?,
        config,
    )?;
    let sets = args.candidates.load(&test)?;

    let gold: Vec<usize> = (0..test.len())
        .filter(|&i| test[i].entity.is_some())
        .collect();
    if gold.is_empty() {
        return Err(CliError::new(
            "EMPTY_INPUT",
            "no test example has a gold entity",
        ));
    }
    let gold_of = |i: usize| test[i].entity.as_deref().unwrap_or_default();

    let accuracy = linking_accuracy(
        gold.iter()
            .map(|&i| (preds[i].chosen.as_deref(), gold_of(i))),
    )?;
    let recall = gold_recall(gold.iter().map(|&i| (&sets[i], gold_of(i))))?;
    let backoff =
        gold.iter().filter(|&&i| preds[i].used_backoff).count() as f64 / gold.len() as f64;
    let mfe: Vec<Option<String>> = gold
        .iter()
        .map(|&i| most_frequent_entity(&sets[i]).ok())
        .collect();
    let mfe_accuracy = linking_accuracy(
        mfe.iter()
            .zip(&gold)
            .map(|(c, &i)| (c.as_deref(), gold_of(i))),
    )?;

    let typed: Vec<usize> = gold
        .iter()
        .copied()
        .filter(|&i| linker.index.contains(gold_of(i)))
        .collect();
    let posteriors: Vec<_> = typed
        .par_iter()
        .map(|&i| linker.posterior(&test[i], args.context_mode))
        .collect::<CliResult<_>>()?;
    let labels: Vec<LabelSet> = typed
        .iter()
        .map(|&i| linker.index.get(gold_of(i)).unwrap_or_default().to_vec())
        .collect();
    let typing = typing_metrics(
        &posteriors,
        &labels,
        linker.model.vocab(),
        args.typing_threshold,
        &default_buckets(),
    )?;

    let mut context_ablation = Vec::new();
    if args.ablate_context {
        let gold_test: Vec<MentionExample> = gold.iter().map(|&i| test[i].clone()).collect();
        let gold_sets: Vec<CandidateSet> = gold.iter().map(|&i| sets[i].clone()).collect();
        for mode in ContextMode::ALL {
            let accuracy = match linker.predict_all(&gold_test, &gold_sets, mode) {
                Ok(p) => Some(linking_accuracy(p.iter().zip(&gold_test).map(|(p, t)| {
                    (p.chosen.as_deref(), t.entity.as_deref().unwrap_or_default())
                }))?),
                Err(e) if e.code == "MISSING_FIELD" => None,
                Err(e) => return Err(e),
            };
            context_ablation.push(ContextAblationRow { mode, accuracy });
        }
    }

    let report = EvalReport {
        examples: gold.len(),
        linking_accuracy: accuracy,
        gold_recall: recall,
        backoff_rate: backoff,
        most_frequent_entity_accuracy: mfe_accuracy,
        typing,
        context_ablation,
    };
    if let Some(path) = &args.report {
        io::write_json(path, &report)?;
    }
    match &args.report_text {
        Some(path) => io::write_text(path, &report.render())?,
        None => print!("{}", report.render()),
    }
    Ok(report)
}

// ---------------------------------------------------------------- pipeline

#[derive(Args, Debug, Clone)]
pub struct PipelineArgs {
    #[arg(long)]
    pub articles: PathBuf,
    #[arg(long)]
    pub categories: PathBuf,
    /// Evaluation examples with gold entities.
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long = "anchor-counts")]
    pub anchor_counts: Vec<PathBuf>,
    /// Directory that receives every stage output.
    #[arg(long = "work-dir")]
    pub work_dir: PathBuf,
    #[arg(long)]
    pub split: bool,
    #[arg(long = "vocab-size", default_value_t = DEFAULT_VOCAB_SIZE)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub fold_case: bool,
    #[arg(long = "context-mode", default_value_t = ContextMode::default())]
    pub context_mode: ContextMode,
    #[arg(long = "backoff-min-cats", default_value_t = DEFAULT_BACKOFF_MIN_CATS)]
    pub backoff_min_cats: usize,
    #[arg(long = "tie-eps", default_value_t = DEFAULT_TIE_EPS)]
    pub tie_eps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "n-train")]
    pub n_train: Option<usize>,
    #[arg(long = "n-dev")]
    pub n_dev: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_EPOCHS)]
    pub epochs: usize,
    #[arg(long = "learning-rate", default_value_t = DEFAULT_LEARNING_RATE)]
    pub learning_rate: f64,
    #[arg(long = "batch-size", default_value_t = DEFAULT_BATCH_SIZE)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.0)]
    pub l2: f64,
    #[arg(long, default_value_t = DEFAULT_DIM)]
    pub dim: u32,
    #[arg(long = "hash-seed", default_value_t = 0)]
    pub hash_seed: u64,
    #[arg(long = "ablate-context")]
    pub ablate_context: bool,
}

impl PipelineArgs {
    pub fn new(articles: PathBuf, categories: PathBuf, test: PathBuf, work_dir: PathBuf) -> Self {
        let t = TrainArgs::default();
        PipelineArgs {
            articles,
            categories,
            test,
            anchor_counts: Vec::new(),
            work_dir,
            split: false,
            vocab_size: DEFAULT_VOCAB_SIZE,
            threshold: DEFAULT_THRESHOLD,
            fold_case: false,
            context_mode: ContextMode::default(),
            backoff_min_cats: DEFAULT_BACKOFF_MIN_CATS,
            tie_eps: DEFAULT_TIE_EPS,
            seed: 0,
            n_train: None,
            n_dev: None,
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            l2: t.l2,
            dim: t.dim,
            hash_seed: t.hash_seed,
            ablate_context: false,
        }
    }
}

/// Output file names inside the pipeline work directory.
pub mod files {
    pub const LINKS: &str = "links.jsonl";
    pub const PRIOR: &str = "prior.tsv";
    pub const VOCAB: &str = "vocab.txt";
    pub const MENTIONS: &str = "mentions.jsonl";
    pub const MODEL: &str = "model.json";
    pub const PREDICTIONS: &str = "predictions.jsonl";
    pub const REPORT: &str = "report.json";
    pub const REPORT_TEXT: &str = "report.txt";
}

/// Runs every stage in order; identical to invoking the stages one by one.
pub fn pipeline(args: &PipelineArgs) -> CliResult<EvalReport> {
    let dir = &args.work_dir;
    let p = |name: &str| Some(dir.join(name));
    let candidates = CandidateArgs {
        prior: p(files::PRIOR),
        threshold: args.threshold,
        candidates: None,
        fold_case: args.fold_case,
    };

    info!("stage: ingest (links)");
    ingest(&IngestArgs {
        articles: Some(args.articles.clone()),
        links: p(files::LINKS),
        split: args.split,
        ..Default::default()
    })?;
    info!("stage: build-prior");
    build_prior(&BuildPriorArgs {
        links: p(files::LINKS),
        anchor_counts: args.anchor_counts.clone(),
        prior: p(files::PRIOR),
    })?;
    info!("stage: build-vocab");
    build_vocab(&BuildVocabArgs {
        test: Some(args.test.clone()),
        categories: Some(args.categories.clone()),
        candidates: candidates.clone(),
        vocab_size: args.vocab_size,
        vocab: p(files::VOCAB),
    })?;
    info!("stage: ingest (labels)");
    ingest(&IngestArgs {
        links: p(files::LINKS),
        categories: Some(args.categories.clone()),
        vocab: p(files::VOCAB),
        mentions: p(files::MENTIONS),
        ..Default::default()
    })?;
    info!("stage: train");
    train(&TrainArgs {
        mentions: p(files::MENTIONS),
        vocab: p(files::VOCAB),
        model: p(files::MODEL),
        context_mode: args.context_mode,
        seed: args.seed,
        n_train: args.n_train,
        n_dev: args.n_dev,
        epochs: args.epochs,
        learning_rate: args.learning_rate,
        batch_size: args.batch_size,
        l2: args.l2,
        dim: args.dim,
        hash_seed: args.hash_seed,
    })?;
    info!("stage: link");
    link_stage(&LinkArgs {
        test: Some(args.test.clone()),
        model: p(files::MODEL),
        categories: Some(args.categories.clone()),
        candidates: candidates.clone(),
        context_mode: args.context_mode,
        backoff_min_cats: args.backoff_min_cats,
        tie_eps: args.tie_eps,
        scoring: ScoringMode::Sum,
        predictions: p(files::PREDICTIONS),
    })?;
    info!("stage: eval");
    evaluate(&EvalArgs {
        test: Some(args.test.clone()),
        predictions: p(files::PREDICTIONS),
        model: p(files::MODEL),
        categories: Some(args.categories.clone()),
        candidates,
        context_mode: args.context_mode,
        backoff_min_cats: args.backoff_min_cats,
        tie_eps: args.tie_eps,
        typing_threshold: DEFAULT_TYPING_THRESHOLD,
        ablate_context: args.ablate_context,
        report: p(files::REPORT),
        report_text: p(files::REPORT_TEXT),
    })
}

// ---------------------------------------------------------------- synth

#[derive(Args, Debug, Clone)]
pub struct SynthArgs {
    /// Directory for articles.txt, categories.tsv, anchors.tsv, test.jsonl.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 13)]
    pub seed: u64,
    #[arg(long = "train-sentences", default_value_t = 5_000)]
    pub train_sentences: usize,
    #[arg(long = "num-categories", default_value_t = 50)]
    pub num_categories: usize,
    #[arg(long, default_value_t = 400)]
    pub entities: usize,
    /// Evaluation surfaces; each yields three test examples.
    #[arg(long = "test-surfaces", default_value_t = 100)]
    pub test_surfaces: usize,
}

pub fn synth_stage(args: &SynthArgs) -> CliResult<()> {
    let config = synth::SynthConfig {
        train_sentences: args.train_sentences,
        categories: args.num_categories,
        entities: args.entities,
        test_surfaces: args.test_surfaces,
        seed: args.seed,
        ..Default::default()
    };
    synth::generate(&config)?.write(&args.out)?;
    Ok(())
}
