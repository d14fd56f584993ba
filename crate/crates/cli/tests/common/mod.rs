#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lexiscreen"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

pub fn ok(args: &[&str]) -> Result<Output, String> {
    let out = run(args);
    if out.status.success() {
        Ok(out)
    } else {
        Err(format!(
            "`lexiscreen {}` exited with {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

pub fn s(p: &Path) -> String {
    p.display().to_string()
}

/// Synthetic train and test corpora plus their feature tables in `dir`.
pub struct Corpus {
    pub train: PathBuf,
    pub test: PathBuf,
    pub train_features: PathBuf,
    pub test_features: PathBuf,
}

pub fn synth_corpus(dir: &Path, n_train: usize, n_test: usize) -> Result<Corpus, String> {
    let d = s(dir);
    let half = |n: usize| (n / 2).to_string();
    ok(&["--out-dir", &d, "--seed", "11", "synth", "--n-positive", &half(n_train), "--n-negative", &half(n_train), "--id-prefix", "train", "--output", "train.jsonl"])?;
    ok(&["--out-dir", &d, "--seed", "12", "synth", "--n-positive", &half(n_test), "--n-negative", &half(n_test), "--id-prefix", "test", "--output", "test.jsonl"])?;
    let c = Corpus {
        train: dir.join("train.jsonl"),
        test: dir.join("test.jsonl"),
        train_features: dir.join("train_features.csv"),
        test_features: dir.join("test_features.csv"),
    };
    ok(&["--out-dir", &d, "extract", "--data", &s(&c.train), "--output", "train_features.csv"])?;
    ok(&["--out-dir", &d, "extract", "--data", &s(&c.test), "--output", "test_features.csv"])?;
    Ok(c)
}

/// Rows of a CSV file as header-keyed string maps.
pub fn read_csv(path: &Path) -> Vec<std::collections::BTreeMap<String, String>> {
    let mut r = csv::Reader::from_path(path).expect("csv opens");
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|row| {
            let row = row.unwrap();
            headers.iter().zip(row.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect()
        })
        .collect()
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("json file exists")).expect("valid json")
}
