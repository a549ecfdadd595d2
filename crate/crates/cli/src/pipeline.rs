//! The experiment stages, each reading its inputs from and writing its
//! outputs under the configured output directory.

use std::collections::HashMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use polyglot_core::data::{generate_corpus, spec_augment, BatchSampler, CorpusManifest};
use polyglot_core::eval::{
    compare_experiments, decode_manifest, precomputed_report, score_hypotheses, DecodedUtterance, ExperimentReport,
    PrecomputedResults, StrategyRates, SystemScores, SystemUnderTest,
};
use polyglot_core::math::{mix_seed, mix_seed_str};
use polyglot_core::model::{train_step, AdamState, Checkpoint, HeadLayout, ModelConfig, ModelParams, TrainExample};
use polyglot_core::tokenize::{
    build_vocabulary, tokens_per_second_stats, BuildOptions, EncodeMode, LanguageRegistry, Strategy, Vocabulary,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, HeadKind, SystemSection};

const MANIFEST: &str = "manifest";
const CHECKPOINT: &str = "checkpoint.json";
const LOSS_CURVE: &str = "loss.tsv";

/// Where each stage keeps its files.
#[derive(Debug, Clone)]
pub struct Paths {
    root: PathBuf,
}

impl Paths {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        Self { root: cfg.out_dir.clone() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn corpus(&self, split: &str) -> PathBuf {
        self.root.join("corpus").join(split)
    }

    pub fn manifest(&self, split: &str) -> PathBuf {
        self.corpus(split).join(format!("{MANIFEST}.jsonl"))
    }

    pub fn vocab(&self, system: &str) -> PathBuf {
        self.root.join("vocab").join(system)
    }

    pub fn model(&self, system: &str) -> PathBuf {
        self.root.join("model").join(system)
    }

    pub fn checkpoint(&self, system: &str) -> PathBuf {
        self.model(system).join(CHECKPOINT)
    }

    pub fn loss_curve(&self, system: &str) -> PathBuf {
        self.model(system).join(LOSS_CURVE)
    }

    pub fn hypotheses(&self, system: &str) -> PathBuf {
        self.root.join("decode").join(system).join("hyps.jsonl")
    }

    pub fn score(&self, system: &str) -> PathBuf {
        self.root.join("score").join(system)
    }

    pub fn stats(&self) -> PathBuf {
        self.root.join("stats")
    }

    pub fn compare(&self) -> PathBuf {
        self.root.join("compare")
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Writes via a temporary sibling and a rename so readers never see a
/// half-written file.
fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        create_dir(dir)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))
}

fn to_jsonl<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}

// ---------------------------------------------------------------- corpus

pub fn gen_corpus(cfg: &ExperimentConfig) -> Result<()> {
    let paths = Paths::new(cfg);
    let languages = cfg.languages();
    for (split, counts) in [("train", &cfg.corpus.train_counts), ("test", &cfg.corpus.test_counts)] {
        let manifest = generate_corpus(&languages, counts, mix_seed_str(cfg.seed, split))?;
        let dir = paths.corpus(split);
        if dir.exists() {
            fs::remove_dir_all(&dir).with_context(|| format!("clearing {}", dir.display()))?;
        }
        create_dir(&dir)?;
        manifest.write(&dir, MANIFEST)?;
    }
    Ok(())
}

pub fn load_corpus(cfg: &ExperimentConfig, split: &str) -> Result<CorpusManifest> {
    let path = Paths::new(cfg).manifest(split);
    ensure!(path.exists(), "{} not found; run gen-corpus first", path.display());
    Ok(CorpusManifest::read(&path)?)
}

/// Registry built from the training transcripts.
pub fn registry(cfg: &ExperimentConfig, train: &CorpusManifest) -> Result<LanguageRegistry> {
    Ok(LanguageRegistry::from_corpora(cfg.vocab.threshold, train.transcripts_by_language())?)
}

// ---------------------------------------------------------------- vocab

fn build_options(cfg: &ExperimentConfig) -> BuildOptions {
    BuildOptions { subword_cap: cfg.vocab.subword_cap, with_unk: cfg.vocab.with_unk }
}

pub fn make_vocab(cfg: &ExperimentConfig, strategy: Strategy, train: &CorpusManifest) -> Result<Vocabulary> {
    Ok(build_vocabulary(&registry(cfg, train)?, strategy, build_options(cfg))?)
}

pub fn build_vocab(cfg: &ExperimentConfig, system: &SystemSection) -> Result<Vocabulary> {
    let train = load_corpus(cfg, "train")?;
    let vocab = make_vocab(cfg, system.strategy, &train)?;
    let dir = Paths::new(cfg).vocab(&system.name);
    if dir.exists() {
        fs::remove_dir_all(&dir).with_context(|| format!("clearing {}", dir.display()))?;
    }
    for (name, text) in vocab.to_files() {
        write_file(&dir.join(name), &text)?;
    }
    Ok(vocab)
}

pub fn load_vocab(cfg: &ExperimentConfig, system: &SystemSection) -> Result<Vocabulary> {
    let dir = Paths::new(cfg).vocab(&system.name);
    ensure!(dir.is_dir(), "{} not found; run build-vocab first", dir.display());
    let mut names: Vec<PathBuf> = fs::read_dir(&dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    names.retain(|p| p.extension().is_some_and(|e| e == "tsv"));
    names.sort();
    let texts = names
        .iter()
        .map(|p| fs::read_to_string(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let vocab = Vocabulary::from_texts(&texts)?;
    ensure!(
        vocab.strategy() == system.strategy,
        "vocabulary in {} was built with {}, config says {}",
        dir.display(),
        vocab.strategy(),
        system.strategy
    );
    Ok(vocab)
}

fn vocab_or_build(cfg: &ExperimentConfig, system: &SystemSection) -> Result<Vocabulary> {
    match load_vocab(cfg, system) {
        Ok(v) => Ok(v),
        Err(_) => build_vocab(cfg, system),
    }
}

// ---------------------------------------------------------------- stats

#[derive(Debug, Clone, Serialize)]
struct StatsRecord<'a> {
    split: &'a str,
    #[serde(flatten)]
    rates: &'a StrategyRates,
}

/// Tokens per second under every strategy, on both splits.
pub fn stats(cfg: &ExperimentConfig) -> Result<Vec<(String, StrategyRates)>> {
    let train = load_corpus(cfg, "train")?;
    let test = load_corpus(cfg, "test")?;
    let mut rows = Vec::new();
    for strategy in Strategy::ALL {
        let vocab = make_vocab(cfg, strategy, &train)?;
        for (split, manifest) in [("train", &train), ("test", &test)] {
            let summary = tokens_per_second_stats(manifest, &vocab)?;
            rows.push((split.to_string(), StrategyRates { strategy, summary }));
        }
    }
    let records: Vec<_> = rows.iter().map(|(s, r)| StatsRecord { split: s, rates: r }).collect();
    let dir = Paths::new(cfg).stats();
    write_file(&dir.join("tokens_per_second.jsonl"), &to_jsonl(&records)?)?;
    let mut table = format!("{:<6} {:<20} {:>8} {:>8} {:>8} {:>8}\n", "split", "strategy", "mean", "std", "min", "max");
    for (split, r) in &rows {
        let s = &r.summary;
        table.push_str(&format!(
            "{:<6} {:<20} {:>8.1} {:>8.1} {:>8.1} {:>8.1}\n",
            split,
            r.strategy.name(),
            s.mean,
            s.std,
            s.min,
            s.max
        ));
    }
    write_file(&dir.join("tokens_per_second.txt"), &table)?;
    Ok(rows)
}

// ---------------------------------------------------------------- training

pub fn model_config(cfg: &ExperimentConfig, system: &SystemSection, vocab: &Vocabulary) -> Result<ModelConfig> {
    let heads = match system.head_kind() {
        HeadKind::Shared => {
            ensure!(vocab.tables().len() == 1, "system {}: a shared head needs a single vocabulary", system.name);
            HeadLayout::Shared { vocab_size: vocab.tables()[0].len() }
        }
        HeadKind::PerLanguage => {
            let mut heads = Vec::new();
            for language in vocab.languages() {
                heads.push((language.clone(), vocab.table_for(language)?.len()));
            }
            HeadLayout::PerLanguage { heads }
        }
    };
    let m = &cfg.model;
    Ok(ModelConfig {
        feature_dim: cfg.corpus.feature_dim,
        subsample_factor: m.subsample_factor,
        encoder_layers: m.encoder_layers,
        encoder_dim: m.hidden_dim,
        embed_dim: m.embed_dim,
        predictor_dim: m.hidden_dim,
        heads,
        seed: mix_seed_str(cfg.seed, "model"),
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TrainOptions {
    /// Continue from the saved checkpoint instead of starting over.
    pub resume: bool,
    /// Stop (and checkpoint) after this many steps; the schedule still spans
    /// the configured total.
    pub stop_after: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub start_step: u64,
    pub end_step: u64,
    /// `(step, mean loss)` for every step run in this invocation.
    pub losses: Vec<(u64, f64)>,
}

fn save_checkpoint(path: &Path, params: &ModelParams, cfg: &ExperimentConfig, opt: &AdamState) -> Result<()> {
    let text = serde_json::to_string(&Checkpoint::new(params, &cfg.train_config(), opt))?;
    write_file(path, &text)
}

/// Trains one system. The loss curve lists `step  loss  lr  grad_norm`.
pub fn train(cfg: &ExperimentConfig, system: &SystemSection, options: TrainOptions) -> Result<TrainSummary> {
    let paths = Paths::new(cfg);
    let train = load_corpus(cfg, "train")?;
    let vocab = vocab_or_build(cfg, system)?;
    let model_cfg = model_config(cfg, system, &vocab)?;
    let train_cfg = cfg.train_config();
    let ckpt_path = paths.checkpoint(&system.name);
    let curve_path = paths.loss_curve(&system.name);

    let (mut params, mut opt, mut curve) = if options.resume {
        let ckpt = Checkpoint::load(&ckpt_path)?;
        ensure!(ckpt.model == model_cfg, "checkpoint model config differs from the experiment config");
        ensure!(ckpt.train == train_cfg, "checkpoint training config differs from the experiment config");
        let step = ckpt.step();
        let curve = fs::read_to_string(&curve_path).unwrap_or_default();
        let kept: String = curve
            .lines()
            .filter(|l| l.split('\t').next().and_then(|s| s.parse::<u64>().ok()).is_some_and(|s| s <= step))
            .map(|l| format!("{l}\n"))
            .collect();
        (ckpt.params()?, ckpt.optimizer, kept)
    } else {
        let params = ModelParams::init(&model_cfg)?;
        let opt = AdamState::new(&params);
        (params, opt, String::new())
    };

    let mut targets: HashMap<&str, Vec<u32>> = HashMap::new();
    for u in &train.utterances {
        targets.insert(&u.id, vocab.encode(&u.transcript, &u.language, EncodeMode::Strict)?);
    }
    let sampler = BatchSampler::new(&train, cfg.sampler.alpha, mix_seed_str(cfg.seed, "sampler"))?;
    let augment_seed = mix_seed_str(cfg.seed, "augment");
    let end = options.stop_after.unwrap_or(cfg.train.steps).min(cfg.train.steps);
    let start = opt.step;
    let mut losses = Vec::new();
    create_dir(&paths.model(&system.name))?;

    while opt.step < end {
        let index = opt.step;
        let utts = sampler.batch(index, cfg.train.batch_size);
        let feats: Vec<_> = utts
            .iter()
            .enumerate()
            .map(|(i, u)| {
                let seed = mix_seed(augment_seed, index * cfg.train.batch_size as u64 + i as u64);
                spec_augment(&u.features, &cfg.augment, seed)
            })
            .collect();
        let batch: Vec<TrainExample<'_>> = utts
            .iter()
            .zip(&feats)
            .map(|(u, f)| TrainExample { id: &u.id, language: &u.language, features: f, targets: &targets[u.id.as_str()] })
            .collect();
        let report = train_step(&mut params, &mut opt, &batch, &train_cfg)?;
        curve.push_str(&format!("{}\t{}\t{}\t{}\n", report.step, report.mean_nll, report.lr, report.grad_norm));
        losses.push((report.step, report.mean_nll));
        if report.step % cfg.train.checkpoint_every == 0 && report.step < end {
            save_checkpoint(&ckpt_path, &params, cfg, &opt)?;
            write_file(&curve_path, &curve)?;
        }
    }
    save_checkpoint(&ckpt_path, &params, cfg, &opt)?;
    write_file(&curve_path, &curve)?;
    Ok(TrainSummary { start_step: start, end_step: opt.step, losses })
}

/// Loads a checkpoint and checks it is a finished run of this config.
pub fn load_trained(cfg: &ExperimentConfig, system: &SystemSection, vocab: &Vocabulary) -> Result<ModelParams> {
    let path = Paths::new(cfg).checkpoint(&system.name);
    ensure!(path.exists(), "{} not found; run train first", path.display());
    let ckpt = Checkpoint::load(&path)?;
    ensure!(ckpt.model == model_config(cfg, system, vocab)?, "{} was trained with a different model config", path.display());
    Ok(ckpt.params()?)
}

fn is_finished(cfg: &ExperimentConfig, system: &SystemSection, vocab: &Vocabulary) -> bool {
    let Ok(ckpt) = Checkpoint::load(&Paths::new(cfg).checkpoint(&system.name)) else {
        return false;
    };
    matches!(model_config(cfg, system, vocab), Ok(m) if m == ckpt.model)
        && ckpt.train == cfg.train_config()
        && ckpt.step() == cfg.train.steps
}

// ---------------------------------------------------------------- decode / score

pub fn decode(cfg: &ExperimentConfig, system: &SystemSection) -> Result<Vec<DecodedUtterance>> {
    let test = load_corpus(cfg, "test")?;
    let vocab = load_vocab(cfg, system)?;
    let params = load_trained(cfg, system, &vocab)?;
    let hyps = decode_manifest(&params, &vocab, &test, cfg.decode_mode(), cfg.decode.max_symbols_per_frame)?;
    write_file(&Paths::new(cfg).hypotheses(&system.name), &to_jsonl(&hyps)?)?;
    Ok(hyps)
}

fn read_hypotheses(path: &Path) -> Result<Vec<DecodedUtterance>> {
    let text = fs::read_to_string(path).with_context(|| format!("{} not found; run decode first", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{} line {}", path.display(), i + 1)))
        .collect()
}

fn write_report(dir: &Path, report: &ExperimentReport) -> Result<()> {
    write_file(&dir.join("report.jsonl"), &report.to_jsonl())?;
    write_file(&dir.join("report.txt"), &report.render_table())
}

pub fn score(cfg: &ExperimentConfig, system: &SystemSection) -> Result<ExperimentReport> {
    let paths = Paths::new(cfg);
    let train = load_corpus(cfg, "train")?;
    let test = load_corpus(cfg, "test")?;
    let vocab = load_vocab(cfg, system)?;
    let hyps = read_hypotheses(&paths.hypotheses(&system.name))?;
    let languages = score_hypotheses(&test, &registry(cfg, &train)?, &hyps)?;
    let scores = SystemScores::new(system.name.clone(), Some(vocab.strategy()), languages);
    let rates = StrategyRates { strategy: vocab.strategy(), summary: tokens_per_second_stats(&test, &vocab)? };
    let report = ExperimentReport::new(vec![scores], vec![rates]);
    write_report(&paths.score(&system.name), &report)?;
    Ok(report)
}

pub fn read_precomputed(path: &Path) -> Result<PrecomputedResults> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(anyhow::Error::from)
    } else {
        toml::from_str(&text).map_err(anyhow::Error::from)
    };
    parsed.with_context(|| format!("parsing {}", path.display()))
}

/// Report over externally supplied error rates, written to `dir`.
pub fn precomputed(results: &PrecomputedResults, dir: &Path) -> Result<ExperimentReport> {
    let report = precomputed_report(results)?;
    write_report(dir, &report)?;
    Ok(report)
}

// ---------------------------------------------------------------- compare

/// Builds, trains (unless a finished checkpoint of the same config exists),
/// decodes and scores every configured system, then writes the comparison.
pub fn compare(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if !Paths::new(cfg).manifest("train").exists() {
        gen_corpus(cfg)?;
    }
    let train_set = load_corpus(cfg, "train")?;
    let test = load_corpus(cfg, "test")?;
    let mut trained = Vec::new();
    for system in &cfg.systems {
        let vocab = build_vocab(cfg, system)?;
        if !is_finished(cfg, system, &vocab) {
            train(cfg, system, TrainOptions::default())?;
        }
        let params = load_trained(cfg, system, &vocab)?;
        trained.push((system.name.as_str(), params, vocab));
    }
    let systems: Vec<_> = trained
        .iter()
        .map(|(name, params, vocab)| SystemUnderTest { name, params, vocab })
        .collect();
    let report = compare_experiments(
        &test,
        &registry(cfg, &train_set)?,
        &systems,
        cfg.decode_mode(),
        cfg.decode.max_symbols_per_frame,
    )?;
    write_report(&Paths::new(cfg).compare(), &report)?;
    Ok(report)
}

/// Fails unless `dir` can be created and written.
pub fn check_writable(dir: &Path) -> Result<()> {
    create_dir(dir)?;
    let probe = dir.join(".write-probe");
    let mut f = fs::File::create(&probe).with_context(|| format!("{} is not writable", dir.display()))?;
    f.write_all(b"")?;
    drop(f);
    fs::remove_file(&probe).ok();
    if !dir.is_dir() {
        bail!("{} is not a directory", dir.display());
    }
    Ok(())
}
