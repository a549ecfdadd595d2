mod common;

use std::collections::BTreeSet;
use std::fs;
use std::process::Command;

use common::{hash_tree, run, tiny_config, TABLE_ONE};
use polyglot_core::data::CorpusManifest;
use polyglot_core::eval::{word_error_rate, DecodedUtterance, Unit};
use polyglot_core::model::Checkpoint;

fn cfg_args(cfg: &std::path::Path) -> Vec<String> {
    vec!["--config".into(), cfg.display().to_string()]
}

fn run_with(cfg: &std::path::Path, rest: &[&str]) -> i32 {
    let mut args: Vec<String> = cfg_args(cfg);
    args.extend(rest.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    run(&refs)
}

#[test]
fn gen_corpus_creates_dirs_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    assert_eq!(run_with(&cfg, &["gen-corpus"]), 0);
    let out = dir.path().join("out");
    let first = hash_tree(&out);
    let train = CorpusManifest::read(&out.join("corpus/train/manifest.jsonl")).unwrap();
    assert_eq!(train.languages().len(), 4);
    assert!(out.join("corpus/test/manifest.jsonl").exists());
    assert_eq!(run_with(&cfg, &["gen-corpus"]), 0);
    assert_eq!(hash_tree(&out), first);
    // A different seed changes the data.
    assert_eq!(run_with(&cfg, &["--seed", "1", "gen-corpus"]), 0);
    assert_ne!(hash_tree(&out), first);
}

#[test]
fn unwritable_output_and_bad_config_fail_with_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain-file");
    fs::write(&file, "x").unwrap();
    let bin = env!("CARGO_BIN_EXE_polyglot");
    let status = Command::new(bin)
        .args(["--out-dir", file.join("sub").to_str().unwrap(), "gen-corpus"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[train]\nsteps = 5\nwarmup_steps = 10\n").unwrap();
    let status = Command::new(bin).args(["--config", bad.to_str().unwrap(), "gen-corpus"]).status().unwrap();
    assert_eq!(status.code(), Some(1));
    // Validation happens before anything is written.
    assert!(!dir.path().join("runs").exists());

    let status = Command::new(bin).arg("no-such-command").status().unwrap();
    assert_eq!(status.code(), Some(1));
    let status = Command::new(bin).arg("--help").output().unwrap().status;
    assert_eq!(status.code(), Some(0));
}

#[test]
fn vocabularies_follow_the_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out = dir.path().join("out");
    assert_eq!(run_with(&cfg, &["gen-corpus"]), 0);
    let train = CorpusManifest::read(&out.join("corpus/train/manifest.jsonl")).unwrap();

    assert_eq!(run_with(&cfg, &["build-vocab", "--system", "ML-SC"]), 0);
    let files: Vec<_> = fs::read_dir(out.join("vocab/ML-SC")).unwrap().collect();
    assert_eq!(files.len(), 1);
    let text = fs::read_to_string(out.join("vocab/ML-SC/vocab.tsv")).unwrap();
    let tokens = text.lines().filter(|l| !l.starts_with('#')).count();
    let union: BTreeSet<char> = train.utterances.iter().flat_map(|u| u.transcript.chars()).collect();
    assert_eq!(tokens, union.len() + 1, "union of characters plus blank");

    assert_eq!(run_with(&cfg, &["build-vocab", "--system", "ML-IO"]), 0);
    let files: Vec<_> = fs::read_dir(out.join("vocab/ML-IO")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 4);
    for f in files {
        let text = fs::read_to_string(&f).unwrap();
        assert!(text.lines().any(|l| l.starts_with("0\t") && l.ends_with("\tblank")), "{}", f.display());
    }

    assert_eq!(run_with(&cfg, &["build-vocab", "--system", "ML-SCW", "--threshold", "1000000000"]), 0);
    let text = fs::read_to_string(out.join("vocab/ML-SCW/vocab.tsv")).unwrap();
    let kinds: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("#language"))
        .map(|l| l.split('\t').nth(2).unwrap())
        .collect();
    assert_eq!(kinds, ["subword"; 4]);
}

#[test]
fn train_decode_score_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out = dir.path().join("out");
    assert_eq!(run_with(&cfg, &["gen-corpus"]), 0);
    assert_eq!(run_with(&cfg, &["train", "--system", "ML-SCW"]), 0);
    let curve = fs::read_to_string(out.join("model/ML-SCW/loss.tsv")).unwrap();
    let losses: Vec<f64> = curve.lines().map(|l| l.split('\t').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(losses.len(), 24);
    assert!(losses.last().unwrap() < losses.first().unwrap());

    assert_eq!(run_with(&cfg, &["decode", "--system", "ML-SCW", "--greedy"]), 0);
    assert_eq!(run_with(&cfg, &["score", "--system", "ML-SCW"]), 0);

    // The report agrees with scoring the hypothesis file directly.
    let test = CorpusManifest::read(&out.join("corpus/test/manifest.jsonl")).unwrap();
    let hyps: Vec<DecodedUtterance> = fs::read_to_string(out.join("decode/ML-SCW/hyps.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let report = fs::read_to_string(out.join("score/ML-SCW/report.jsonl")).unwrap();
    for line in report.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        if v["record"] != "score" {
            continue;
        }
        let lang = v["language"].as_str().unwrap();
        let unit = if v["unit"] == "char" { Unit::Char } else { Unit::Word };
        let refs: Vec<&str> = test.utterances.iter().filter(|u| u.language.as_str() == lang).map(|u| u.transcript.as_str()).collect();
        let outs: Vec<&str> = hyps.iter().filter(|h| h.language.as_str() == lang).map(|h| h.text.as_str()).collect();
        let expected = word_error_rate(&refs, &outs, unit).unwrap();
        assert_eq!(v["wer_percent"].as_f64().unwrap(), expected.wer_percent);
        assert_eq!(v["deletions"].as_u64().unwrap() as usize, expected.counts.deletions);
    }
    assert!(fs::read_to_string(out.join("score/ML-SCW/report.txt")).unwrap().contains("ML-SCW"));
}

#[test]
fn zero_learning_rate_gives_flat_curve_and_unchanged_weights() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out = dir.path().join("out");
    assert_eq!(run_with(&cfg, &["gen-corpus"]), 0);
    assert_eq!(run_with(&cfg, &["train", "--system", "ML-SC", "--steps", "1"]), 1, "warmup >= steps is rejected");
    assert_eq!(run_with(&cfg, &["train", "--system", "ML-SC", "--lr", "0"]), 0);
    let ckpt = Checkpoint::load(&out.join("model/ML-SC/checkpoint.json")).unwrap();
    let trained = ckpt.params().unwrap();
    let fresh = polyglot_core::model::ModelParams::init(&ckpt.model).unwrap();
    assert_eq!(trained, fresh);
    let curve = fs::read_to_string(out.join("model/ML-SC/loss.tsv")).unwrap();
    assert!(curve.lines().all(|l| l.split('\t').nth(2) == Some("0")));
}

#[test]
fn resumed_training_matches_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out = dir.path().join("out");
    assert_eq!(run_with(&cfg, &["gen-corpus"]), 0);
    assert_eq!(run_with(&cfg, &["train", "--system", "ML-IO"]), 0);
    let full_curve = fs::read_to_string(out.join("model/ML-IO/loss.tsv")).unwrap();
    let full_ckpt = fs::read_to_string(out.join("model/ML-IO/checkpoint.json")).unwrap();

    assert_eq!(run_with(&cfg, &["train", "--system", "ML-IO", "--stop-after", "10"]), 0);
    assert_eq!(fs::read_to_string(out.join("model/ML-IO/loss.tsv")).unwrap().lines().count(), 10);
    assert_eq!(run_with(&cfg, &["train", "--system", "ML-IO", "--resume"]), 0);
    assert_eq!(fs::read_to_string(out.join("model/ML-IO/loss.tsv")).unwrap(), full_curve);
    assert_eq!(fs::read_to_string(out.join("model/ML-IO/checkpoint.json")).unwrap(), full_ckpt);
}

#[test]
fn precomputed_table_reproduces_quoted_ranges() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("table1.toml");
    fs::write(&table, TABLE_ONE).unwrap();
    let out = dir.path().join("out");
    let args = ["--out-dir", out.to_str().unwrap(), "score", "--precomputed-results", table.to_str().unwrap()];
    assert_eq!(run(&args), 0);
    let report = fs::read_to_string(out.join("score/precomputed/report.jsonl")).unwrap();
    let rel = |sys: &str, base: &str, col: &str| -> f64 {
        report
            .lines()
            .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
            .find(|v| v["record"] == "improvement" && v["system"] == sys && v["baseline"] == base && v["column"] == col)
            .unwrap()["relative_percent"]
            .as_f64()
            .unwrap()
    };
    assert_eq!(format!("{:.1}", rel("ML-SCW", "MO", "vid-clean")), "12.0");
    assert_eq!(format!("{:.1}", rel("ML-IO", "MO", "vid-noisy")), "13.9");
    let missing = dir.path().join("nope.toml");
    assert_eq!(run(&["score", "--precomputed-results", missing.to_str().unwrap()]), 1);
}

#[test]
fn every_command_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out = dir.path().join("out");
    let table = dir.path().join("table1.toml");
    fs::write(&table, TABLE_ONE).unwrap();
    let table = table.display().to_string();
    let commands: Vec<Vec<&str>> = vec![
        vec!["gen-corpus"],
        vec!["build-vocab", "--system", "ML-SCW"],
        vec!["stats"],
        vec!["train", "--system", "ML-SCW"],
        vec!["decode", "--system", "ML-SCW"],
        vec!["score", "--system", "ML-SCW"],
        vec!["compare", "--precomputed-results", &table],
        vec!["compare"],
    ];
    for cmd in &commands {
        assert_eq!(run_with(&cfg, cmd), 0, "{cmd:?}");
        let first = hash_tree(&out);
        assert_eq!(run_with(&cfg, cmd), 0, "{cmd:?}");
        assert_eq!(hash_tree(&out), first, "{cmd:?} is not idempotent");
    }
    let report = fs::read_to_string(out.join("compare/report.txt")).unwrap();
    assert!(report.contains("Tokens per second") && report.contains("ML-IO"));
}
