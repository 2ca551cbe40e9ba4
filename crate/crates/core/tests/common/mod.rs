#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use topicmetrics::synthetic::{stance_corpus, SyntheticConfig};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_topicmetrics"))
}

/// Run the binary in `dir` with relative paths, so two runs in different
/// directories see identical arguments.
pub fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

pub fn run_ok(dir: &Path, args: &[&str]) {
    let out = run_in(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// A raw (untokenized) synthetic corpus written as JSONL.
pub fn write_corpus(dir: &Path, name: &str, cfg: &SyntheticConfig, seed: u64) -> PathBuf {
    let (mut corpus, _) = stance_corpus(cfg, seed);
    for d in &mut corpus.documents {
        d.tokens.clear();
    }
    let path = dir.join(name);
    let mut buf = Vec::new();
    corpus.write_jsonl(&mut buf, None).unwrap();
    std::fs::write(&path, buf).unwrap();
    path
}

/// prep → embed → topics fit → classify ×3 → sweep → report, inside `dir`.
pub fn full_pipeline(dir: &Path, seed: &str) -> Vec<u8> {
    let cfg = SyntheticConfig { n_docs: 120, ..SyntheticConfig::moderate_link() };
    write_corpus(dir, "raw.jsonl", &cfg, 3);
    run_ok(dir, &["prep", "--input", "raw.jsonl", "--output", "tok.jsonl", "--seed", seed]);
    run_ok(
        dir,
        &["embed", "lsa", "--input", "tok.jsonl", "--output", "emb.bin", "--dim", "16", "--seed", seed],
    );
    run_ok(
        dir,
        &[
            "topics",
            "fit",
            "--input",
            "tok.jsonl",
            "--output",
            "model.json",
            "--model",
            "cluster",
            "--k",
            "10",
            "--embeddings",
            "emb.bin",
            "--seed",
            seed,
        ],
    );
    for kind in ["topic", "sentiment", "combined"] {
        let out = format!("{kind}.json");
        run_ok(
            dir,
            &[
                "classify",
                "--input",
                "tok.jsonl",
                "--model",
                "model.json",
                "--features",
                kind,
                "--classifier",
                "logistic",
                "--folds",
                "10",
                "--dataset",
                "SYN",
                "--output",
                &out,
                "--seed",
                seed,
            ],
        );
    }
    run_ok(
        dir,
        &[
            "coherence",
            "sweep",
            "--input",
            "tok.jsonl",
            "--output",
            "sweep.csv",
            "--k-min",
            "4",
            "--k-max",
            "8",
            "--step",
            "4",
            "--models",
            "lda,nmf,cluster",
            "--lda-iterations",
            "50",
            "--embeddings",
            "emb.bin",
            "--seed",
            seed,
        ],
    );
    run_ok(
        dir,
        &[
            "report",
            "--results",
            "topic.json",
            "sentiment.json",
            "combined.json",
            "--sweep",
            "sweep.csv",
            "--format",
            "markdown",
            "--output",
            "report.md",
            "--seed",
            seed,
        ],
    );
    std::fs::read(dir.join("report.md")).unwrap()
}
