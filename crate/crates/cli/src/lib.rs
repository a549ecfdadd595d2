//! Command-line driver: corpus generation, vocabulary building, training,
//! decoding, scoring and the topology comparison.

pub mod config;
pub mod pipeline;

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::{ensure, Result};
use clap::{Args, Parser, Subcommand};
use polyglot_core::tokenize::Strategy;

use crate::config::{ExperimentConfig, SearchKind};
use crate::pipeline::{Paths, TrainOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "polyglot", version, about = "Multilingual transducer toy experiments")]
pub struct Cli {
    /// Experiment config (TOML). Defaults apply to anything it leaves out.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `out_dir`.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct SystemArg {
    /// System from the config's `systems` list (default: the first).
    #[arg(long)]
    pub system: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic train/test corpora.
    GenCorpus,
    /// Build one system's vocabulary.
    BuildVocab {
        #[command(flatten)]
        system: SystemArg,
        #[arg(long)]
        strategy: Option<Strategy>,
        /// Alphabet size above which a language keeps character units
        #[arg(long)]
        threshold: Option<usize>,
        /// Per-language subword vocabulary size
        #[arg(long)]
        subword_cap: Option<usize>,
        /// Reserve id 1 for unknown characters
        #[arg(long)]
        with_unk: bool,
    },
    /// Tokens-per-second statistics for every strategy.
    Stats,
    /// Train one system.
    Train {
        #[command(flatten)]
        system: SystemArg,
        /// Total optimiser steps
        #[arg(long)]
        steps: Option<u64>,
        /// Peak learning rate
        #[arg(long)]
        lr: Option<f64>,
        /// Utterances per step
        #[arg(long)]
        batch_size: Option<usize>,
        /// Continue from the saved checkpoint.
        #[arg(long)]
        resume: bool,
        /// Stop after this step (the schedule still spans `steps`).
        #[arg(long)]
        stop_after: Option<u64>,
    },
    /// Decode the test set with a trained system.
    Decode {
        #[command(flatten)]
        system: SystemArg,
        /// Greedy search instead of beam search
        #[arg(long, conflicts_with = "beam_width")]
        greedy: bool,
        /// Beam width for beam search
        #[arg(long)]
        beam_width: Option<usize>,
    },
    /// Score a system's hypotheses, or a table of precomputed error rates.
    Score {
        #[command(flatten)]
        system: SystemArg,
        #[arg(long)]
        precomputed_results: Option<PathBuf>,
    },
    /// Train, decode and compare every configured system.
    Compare {
        #[arg(long)]
        precomputed_results: Option<PathBuf>,
    },
}

/// Configuration or usage problems, reported with exit code 1.
#[derive(Debug)]
struct UsageError(anyhow::Error);

fn usage<T>(r: Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(|e| Failure::Usage(UsageError(e)))
}

#[derive(Debug)]
enum Failure {
    Usage(UsageError),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn resolve(cli: &mut Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(dir) = cli.out_dir.take() {
        cfg.out_dir = dir;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match &cli.command {
        Command::BuildVocab { system, strategy, threshold, subword_cap, with_unk } => {
            let name = cfg.system(system.system.as_deref())?.name.clone();
            if let Some(s) = strategy {
                let entry = cfg.systems.iter_mut().find(|s| s.name == name).expect("system exists");
                entry.strategy = *s;
            }
            if let Some(t) = threshold {
                cfg.vocab.threshold = *t;
            }
            if let Some(c) = subword_cap {
                cfg.vocab.subword_cap = *c;
            }
            if *with_unk {
                cfg.vocab.with_unk = true;
            }
        }
        Command::Train { system, steps, lr, batch_size, stop_after, .. } => {
            cfg.system(system.system.as_deref())?;
            if let Some(s) = steps {
                cfg.train.steps = *s;
            }
            if let Some(lr) = lr {
                cfg.train.peak_lr = *lr;
            }
            if let Some(b) = batch_size {
                cfg.train.batch_size = *b;
            }
            if let Some(k) = stop_after {
                ensure!(*k <= cfg.train.steps, "--stop-after {k} exceeds the {} configured steps", cfg.train.steps);
            }
        }
        Command::Decode { system, greedy, beam_width } => {
            cfg.system(system.system.as_deref())?;
            if *greedy {
                cfg.decode.search = SearchKind::Greedy;
            }
            if let Some(w) = beam_width {
                cfg.decode.search = SearchKind::Beam;
                cfg.decode.beam_width = *w;
            }
        }
        Command::Score { system, precomputed_results } => {
            if let Some(p) = precomputed_results {
                ensure!(p.exists(), "precomputed results file {} not found", p.display());
            } else {
                cfg.system(system.system.as_deref())?;
            }
        }
        Command::Compare { precomputed_results: Some(p) } => {
            ensure!(p.exists(), "precomputed results file {} not found", p.display());
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli, cfg: &ExperimentConfig) -> Result<()> {
    let paths = Paths::new(cfg);
    pipeline::check_writable(paths.root())?;
    let pick = |s: &SystemArg| cfg.system(s.system.as_deref()).cloned();
    match cli.command {
        Command::GenCorpus => pipeline::gen_corpus(cfg),
        Command::BuildVocab { system, .. } => pipeline::build_vocab(cfg, &pick(&system)?).map(drop),
        Command::Stats => pipeline::stats(cfg).map(drop),
        Command::Train { system, resume, stop_after, .. } => {
            let summary = pipeline::train(cfg, &pick(&system)?, TrainOptions { resume, stop_after })?;
            if let (Some(first), Some(last)) = (summary.losses.first(), summary.losses.last()) {
                eprintln!("steps {}..{}: loss {:.4} -> {:.4}", first.0, last.0, first.1, last.1);
            }
            Ok(())
        }
        Command::Decode { system, .. } => pipeline::decode(cfg, &pick(&system)?).map(drop),
        Command::Score { system, precomputed_results } => match precomputed_results {
            Some(path) => {
                let results = pipeline::read_precomputed(&path)?;
                pipeline::precomputed(&results, &paths.score("precomputed")).map(drop)
            }
            None => pipeline::score(cfg, &pick(&system)?).map(drop),
        },
        Command::Compare { precomputed_results } => match precomputed_results {
            Some(path) => {
                let results = pipeline::read_precomputed(&path)?;
                pipeline::precomputed(&results, &paths.compare()).map(drop)
            }
            None => pipeline::compare(cfg).map(drop),
        },
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
/// Diagnostics go to standard error; results only to files.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = usage(resolve(&mut cli)).and_then(|cfg| execute(cli, &cfg).map_err(Failure::from));
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(UsageError(e))) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            EXIT_RUNTIME
        }
    }
}
