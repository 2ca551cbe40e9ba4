//! Topic coherence (NPMI over sliding windows, UMass over documents), the
//! topic-count sweep, and the relative-enhancement arithmetic.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{build_doc_term_matrix, Corpus, Weighting};
use crate::embedding::{lsa_embed, EmbeddingMatrix, DEFAULT_LSA_DIM};
use crate::error::{ensure, Error, Result};
use crate::seed::derive_seed;
use crate::topics::{
    fit_cluster_topics, fit_lda, fit_nmf, top_keywords, LdaParams, ModelKind, NmfParams, TopicKeywords,
    TopicModelResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Npmi,
    Umass,
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::Npmi => "npmi",
            Measure::Umass => "umass",
        })
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "npmi" => Ok(Measure::Npmi),
            "umass" => Ok(Measure::Umass),
            other => Err(Error::InvalidInput(format!("unknown coherence measure {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceConfig {
    pub measure: Measure,
    pub top_n: usize,
    /// Sliding-window length in tokens (NPMI only).
    pub window: usize,
    pub epsilon: f64,
}

impl Default for CoherenceConfig {
    fn default() -> Self {
        Self { measure: Measure::Npmi, top_n: 10, window: 10, epsilon: 1e-12 }
    }
}

impl CoherenceConfig {
    fn validate(&self) -> Result<()> {
        ensure!(self.top_n >= 2, Precondition, "top_n must be at least 2");
        ensure!(self.window >= 2, Precondition, "window must be at least 2");
        ensure!(self.epsilon > 0.0, Precondition, "epsilon must be positive");
        Ok(())
    }
}

/// Occurrence counts of one topic's words over a set of contexts
/// (windows for NPMI, documents for UMass).
struct Cooccurrence {
    contexts: usize,
    single: Vec<usize>,
    pair: Vec<Vec<usize>>,
}

impl Cooccurrence {
    fn new(n: usize) -> Self {
        Self { contexts: 0, single: vec![0; n], pair: vec![vec![0; n]; n] }
    }

    fn record(&mut self, present: &[bool]) {
        self.contexts += 1;
        for (i, &here) in present.iter().enumerate() {
            if here {
                self.single[i] += 1;
                for (j, &there) in present.iter().enumerate().skip(i + 1) {
                    if there {
                        self.pair[i][j] += 1;
                    }
                }
            }
        }
    }

    fn joint(&self, i: usize, j: usize) -> usize {
        if i < j {
            self.pair[i][j]
        } else {
            self.pair[j][i]
        }
    }
}

fn count_topic(words: &[&str], corpus: &Corpus, config: &CoherenceConfig) -> Cooccurrence {
    let slot: HashMap<&str, usize> = words.iter().enumerate().map(|(i, w)| (*w, i)).collect();
    let mut counts = Cooccurrence::new(words.len());
    let mut present = vec![false; words.len()];
    for doc in &corpus.documents {
        if doc.tokens.is_empty() {
            continue;
        }
        let ids: Vec<Option<usize>> = doc.tokens.iter().map(|t| slot.get(t.as_str()).copied()).collect();
        match config.measure {
            Measure::Umass => {
                present.fill(false);
                ids.iter().flatten().for_each(|&i| present[i] = true);
                counts.record(&present);
            }
            Measure::Npmi => {
                let width = config.window.min(ids.len());
                let mut in_window = vec![0usize; words.len()];
                ids[..width].iter().flatten().for_each(|&i| in_window[i] += 1);
                for start in 0..=ids.len() - width {
                    if start > 0 {
                        if let Some(i) = ids[start - 1] {
                            in_window[i] -= 1;
                        }
                        if let Some(i) = ids[start + width - 1] {
                            in_window[i] += 1;
                        }
                    }
                    for (p, &c) in present.iter_mut().zip(&in_window) {
                        *p = c > 0;
                    }
                    counts.record(&present);
                }
            }
        }
    }
    counts
}

/// NPMI of one pair from raw counts. A pair co-occurring in every context
/// scores exactly 1; zero counts are replaced by `epsilon` probabilities.
pub fn npmi(joint: usize, count_a: usize, count_b: usize, contexts: usize, epsilon: f64) -> f64 {
    let n = contexts as f64;
    if joint == contexts && contexts > 0 {
        return 1.0;
    }
    let prob = |c: usize| if c == 0 { epsilon } else { c as f64 / n };
    let p_ab = prob(joint);
    let value = (p_ab.ln() - prob(count_a).ln() - prob(count_b).ln()) / -p_ab.ln();
    value.clamp(-1.0, 1.0)
}

/// Coherence of a single topic's keyword list.
pub fn topic_coherence(words: &[&str], corpus: &Corpus, config: &CoherenceConfig) -> Result<f64> {
    config.validate()?;
    ensure!(words.len() >= 2, InvalidInput, "a topic needs at least two keywords");
    let counts = count_topic(words, corpus, config);
    ensure!(counts.contexts > 0, InvalidInput, "corpus has no tokens to score coherence against");
    for (w, &c) in words.iter().zip(&counts.single) {
        if c == 0 {
            log::warn!("keyword {w:?} never occurs in the reference corpus; using epsilon smoothing");
        }
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..words.len() {
        for j in i + 1..words.len() {
            total += match config.measure {
                Measure::Npmi => npmi(
                    counts.joint(i, j),
                    counts.single[i],
                    counts.single[j],
                    counts.contexts,
                    config.epsilon,
                ),
                Measure::Umass => umass_pair(counts.joint(i, j), counts.single[i], config.epsilon),
            };
            pairs += 1;
        }
    }
    Ok(match config.measure {
        Measure::Npmi => total / pairs as f64,
        Measure::Umass => total,
    })
}

/// `ln((D(wi, wj) + 1) / D(wi))`; an absent conditioning word contributes `ln(epsilon)`.
pub fn umass_pair(joint: usize, count_i: usize, epsilon: f64) -> f64 {
    if count_i == 0 {
        epsilon.ln()
    } else {
        ((joint as f64 + 1.0) / count_i as f64).ln()
    }
}

/// Mean per-topic coherence of the first `top_n` keywords of every topic.
pub fn coherence_score(keywords: &TopicKeywords, corpus: &Corpus, config: &CoherenceConfig) -> Result<f64> {
    config.validate()?;
    ensure!(
        !keywords.is_empty() && keywords.iter().all(|t| !t.is_empty()),
        InvalidInput,
        "empty keyword list"
    );
    let mut sum = 0.0;
    for topic in keywords {
        let words: Vec<&str> = topic.iter().take(config.top_n).map(|(w, _)| w.as_str()).collect();
        sum += topic_coherence(&words, corpus, config)?;
    }
    Ok(sum / keywords.len() as f64)
}

/// Relative gain of the cluster model over the better of LDA and NMF, in percent.
pub fn enhancement(cluster_best: f64, lda_best: f64, nmf_best: f64) -> Result<f64> {
    ensure!(
        cluster_best > 0.0 && lda_best > 0.0 && nmf_best > 0.0,
        InvalidInput,
        "enhancement needs positive coherence scores (got {cluster_best}, {lda_best}, {nmf_best})"
    );
    let baseline = lda_best.max(nmf_best);
    Ok((cluster_best - baseline) / baseline * 100.0)
}

/// One model family with its fixed hyperparameters; K comes from the sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    /// `alpha: None` means 50/K.
    Lda {
        alpha: Option<f64>,
        beta: f64,
        iterations: usize,
    },
    Nmf(NmfParams),
    Cluster,
}

impl ModelSpec {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Lda => ModelSpec::Lda { alpha: None, beta: 0.01, iterations: 1000 },
            ModelKind::Nmf => ModelSpec::Nmf(NmfParams::default()),
            ModelKind::Cluster => ModelSpec::Cluster,
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Lda { .. } => ModelKind::Lda,
            ModelSpec::Nmf(_) => ModelKind::Nmf,
            ModelSpec::Cluster => ModelKind::Cluster,
        }
    }

    pub fn hyperparams(&self, k: usize) -> String {
        match self {
            ModelSpec::Lda { alpha, beta, iterations } => {
                format!("alpha={};beta={beta};iterations={iterations}", alpha.unwrap_or(50.0 / k as f64))
            }
            ModelSpec::Nmf(p) => format!("iterations={};tol={};epsilon={}", p.iterations, p.tol, p.epsilon),
            ModelSpec::Cluster => format!("reduced_dim=5;kmeans_restarts={}", crate::topics::KMEANS_RESTARTS),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub model: ModelKind,
    pub k: usize,
    pub hyperparams: String,
    pub measure: Measure,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Highest score per model kind, in first-seen order.
    pub fn best_by_model(&self) -> Vec<(ModelKind, usize, f64)> {
        let mut best: Vec<(ModelKind, usize, f64)> = Vec::new();
        for r in &self.rows {
            match best.iter_mut().find(|b| b.0 == r.model) {
                Some(b) if r.score > b.2 => *b = (r.model, r.k, r.score),
                Some(_) => {}
                None => best.push((r.model, r.k, r.score)),
            }
        }
        best
    }

    /// `model,k,measure,score` with scores at four decimals, preceded by an
    /// optional `# run_config: ...` comment line.
    pub fn write_csv<W: Write>(
        &self,
        mut out: W,
        run_config: Option<&serde_json::Value>,
    ) -> std::io::Result<()> {
        if let Some(cfg) = run_config {
            writeln!(out, "# run_config: {cfg}")?;
        }
        writeln!(out, "model,k,measure,score")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{:.4}", r.model, r.k, r.measure, r.score)?;
        }
        Ok(())
    }

    pub fn read_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == "model,k,measure,score" => {}
            _ => return Err(Error::Parse { line: 1, msg: "missing sweep CSV header".into() }),
        }
        for (i, line) in lines {
            let bad = |what: &str| Error::Parse { line: i + 1, msg: format!("bad sweep row ({what})") };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad("expected 4 fields"));
            }
            rows.push(SweepRow {
                model: f[0].parse().map_err(|_| bad("model"))?,
                k: f[1].parse().map_err(|_| bad("k"))?,
                hyperparams: String::new(),
                measure: f[2].parse().map_err(|_| bad("measure"))?,
                score: f[3].parse().map_err(|_| bad("score"))?,
            });
        }
        Ok(Self { rows })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KRange {
    pub min: usize,
    pub max: usize,
    pub step: usize,
}

impl KRange {
    pub fn values(&self) -> Result<Vec<usize>> {
        ensure!(
            self.min >= 1 && self.min <= self.max,
            Precondition,
            "need 1 <= k_min <= k_max (got {} and {})",
            self.min,
            self.max
        );
        ensure!(self.step >= 1, Precondition, "step must be at least 1");
        Ok((self.min..=self.max).step_by(self.step).collect())
    }
}

/// Fit one model at one K. Shared by the sweep and the CLI.
pub fn fit_model(
    spec: &ModelSpec,
    corpus: &Corpus,
    k: usize,
    embeddings: Option<&EmbeddingMatrix>,
    seed: u64,
) -> Result<TopicModelResult> {
    let counts = build_doc_term_matrix(corpus, Weighting::Count, 1)?;
    match spec {
        ModelSpec::Lda { alpha, beta, iterations } => fit_lda(
            &counts,
            k,
            LdaParams {
                alpha: alpha.unwrap_or(50.0 / k.max(1) as f64),
                beta: *beta,
                iterations: *iterations,
            },
            seed,
        ),
        ModelSpec::Nmf(params) => {
            let tfidf = build_doc_term_matrix(corpus, Weighting::Tfidf, 1)?;
            fit_nmf(&tfidf, k, *params, seed)
        }
        ModelSpec::Cluster => {
            let owned;
            let emb = match embeddings {
                Some(e) => e,
                None => {
                    owned = default_embeddings(corpus, seed)?;
                    &owned
                }
            };
            fit_cluster_topics(emb, &counts, k, seed)
        }
    }
}

/// LSA embeddings with dimension `min(64, n_docs, n_terms)`.
pub fn default_embeddings(corpus: &Corpus, seed: u64) -> Result<EmbeddingMatrix> {
    let tfidf = build_doc_term_matrix(corpus, Weighting::Tfidf, 1)?;
    let dim = DEFAULT_LSA_DIM.min(tfidf.rows()).min(tfidf.cols());
    lsa_embed(&tfidf, dim, derive_seed(seed, "lsa"))
}

/// Fit every (model, K) configuration and score its top keywords. Each
/// configuration gets seed `seed ⊕ hash("model:K")`, so results do not depend
/// on execution order; configurations run in parallel.
pub fn sweep(
    corpus: &Corpus,
    models: &[ModelSpec],
    ks: KRange,
    config: &CoherenceConfig,
    seed: u64,
    embeddings: Option<&EmbeddingMatrix>,
) -> Result<SweepResult> {
    config.validate()?;
    let k_values = ks.values()?;
    let owned;
    let embeddings = match embeddings {
        Some(e) => Some(e),
        None if models.iter().any(|m| matches!(m, ModelSpec::Cluster)) => {
            owned = default_embeddings(corpus, seed)?;
            Some(&owned)
        }
        None => None,
    };
    let configs: Vec<(&ModelSpec, usize)> =
        models.iter().flat_map(|m| k_values.iter().map(move |&k| (m, k))).collect();
    let rows = configs
        .par_iter()
        .map(|&(spec, k)| {
            let label = format!("{}:{k}", spec.kind());
            let run = || -> Result<SweepRow> {
                let model = fit_model(spec, corpus, k, embeddings, derive_seed(seed, &label))?;
                let n = config.top_n.min(model.vocabulary.len());
                let keywords = top_keywords(&model, n)?;
                Ok(SweepRow {
                    model: spec.kind(),
                    k,
                    hyperparams: spec.hyperparams(k),
                    measure: config.measure,
                    score: coherence_score(&keywords, corpus, config)?,
                })
            };
            run().map_err(|e| e.context(format!("model={} k={k}", spec.kind())))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { rows })
}
