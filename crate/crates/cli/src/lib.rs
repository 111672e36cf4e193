//! Command-line front end: one subcommand per pipeline stage plus
//! `pipeline`, which runs them all into a work directory.

pub mod error;
pub mod stages;

use clap::{Parser, Subcommand};

pub use error::{CliError, CliResult};
use stages::*;

#[derive(Parser, Debug)]
#[command(
    name = "et4el",
    version,
    about = "Entity linking through fine-grained entity typing"
)]
pub struct Cli {
    /// Worker threads for parallel stages (training is always single-threaded).
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Extract link examples from articles and/or attach category labels.
    Ingest(IngestArgs),
    /// Count anchor links into a mention-entity prior.
    BuildPrior(BuildPriorArgs),
    /// Select the category vocabulary from the candidates of target mentions.
    BuildVocab(BuildVocabArgs),
    /// Train the typing model.
    Train(TrainArgs),
    /// Link target mentions.
    Link(LinkArgs),
    /// Score predictions and typing quality.
    Eval(EvalArgs),
    /// Run every stage into a work directory.
    Pipeline(PipelineArgs),
    /// Write a seeded synthetic corpus.
    Synth(SynthArgs),
}

pub fn run(cli: &Cli) -> CliResult<()> {
    if cli.workers == 0 {
        return Err(CliError::usage("--workers must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build()
        .map_err(|e| CliError::new("IO_ERROR", e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Ingest(a) => ingest(a),
        Command::BuildPrior(a) => build_prior(a),
        Command::BuildVocab(a) => build_vocab(a),
        Command::Train(a) => train(a),
        Command::Link(a) => link_stage(a),
        Command::Eval(a) => evaluate(a).map(drop),
        Command::Pipeline(a) => pipeline(a).map(drop),
        Command::Synth(a) => synth_stage(a),
    })
}
