#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

/// A small but complete experiment: the standard languages with few
/// utterances and a narrow model.
pub fn tiny_config(dir: &Path) -> PathBuf {
    let path = dir.join("tiny.toml");
    let text = format!(
        r#"
seed = 99
out_dir = "{}"

[corpus]
feature_dim = 8
train_counts = [24, 16, 12, 20]
test_counts = [3, 3, 3, 3]

[vocab]
subword_cap = 40

[model]
subsample_factor = 2
encoder_layers = 1
hidden_dim = 12
embed_dim = 6

[train]
steps = 24
warmup_steps = 4
peak_lr = 0.003
batch_size = 3
checkpoint_every = 8
"#,
        dir.join("out").display()
    );
    std::fs::write(&path, text).unwrap();
    path
}

pub fn run(args: &[&str]) -> i32 {
    let mut full = vec!["polyglot"];
    full.extend_from_slice(args);
    polyglot_cli::run(full)
}

/// SHA-256 of every file under `root`, keyed by relative path.
pub fn hash_tree(root: &Path) -> BTreeMap<String, String> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let bytes = std::fs::read(&p).unwrap();
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, hex::encode(Sha256::digest(&bytes)));
            }
        }
    }
    let mut out = BTreeMap::new();
    if root.exists() {
        walk(root, root, &mut out);
    }
    out
}

pub const TABLE_ONE: &str = r#"
columns = ["vid-clean", "vid-noisy"]

[[systems]]
name = "MO"
wer = [19.2, 20.2]

[[systems]]
name = "ML-SC"
wer = [20.6, 21.4]

[[systems]]
name = "ML-SCW"
wer = [16.9, 17.8]

[[systems]]
name = "ML-IO"
wer = [16.2, 17.4]
"#;
