use ndarray::Array2;
use rand::Rng;

use super::{argmax_rows, ModelKind, TopicModelResult};
use crate::corpus::DocTermMatrix;
use crate::error::{ensure, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdaParams {
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
}

impl LdaParams {
    /// α = 50/K, β = 0.01, 1000 sweeps.
    pub fn for_k(k: usize) -> Self {
        Self { alpha: 50.0 / k.max(1) as f64, beta: 0.01, iterations: 1000 }
    }
}

/// Collapsed Gibbs sampler state. Exposed so callers can step sweep by sweep.
pub struct LdaSampler {
    k: usize,
    n_terms: usize,
    alpha: f64,
    beta: f64,
    /// (document, term) for every token occurrence.
    tokens: Vec<(usize, usize)>,
    topic_of: Vec<usize>,
    doc_topic: Array2<u32>,
    topic_term: Array2<u32>,
    topic_total: Vec<u32>,
    doc_len: Vec<u32>,
    rng: rand_chacha::ChaCha8Rng,
    probs: Vec<f64>,
}

impl LdaSampler {
    pub fn new(dtm: &DocTermMatrix, k: usize, alpha: f64, beta: f64, seed: u64) -> Result<Self> {
        ensure!(k >= 1, Precondition, "number of topics must be at least 1 (got {k})");
        ensure!(alpha > 0.0 && beta > 0.0, Precondition, "alpha and beta must be positive");
        ensure!(dtm.rows() > 0, InvalidInput, "empty corpus");
        let mut tokens = Vec::new();
        for d in 0..dtm.rows() {
            for (w, c) in dtm.row(d) {
                ensure!(
                    c.fract() == 0.0 && c >= 0.0,
                    InvalidInput,
                    "LDA needs integral counts (document {d}, term {w} has {c})"
                );
                tokens.extend(std::iter::repeat_n((d, w), c as usize));
            }
        }
        let mut rng = seed::rng(seed);
        let mut s = Self {
            k,
            n_terms: dtm.cols(),
            alpha,
            beta,
            topic_of: Vec::with_capacity(tokens.len()),
            doc_topic: Array2::zeros((dtm.rows(), k)),
            topic_term: Array2::zeros((k, dtm.cols())),
            topic_total: vec![0; k],
            doc_len: vec![0; dtm.rows()],
            probs: vec![0.0; k],
            tokens,
            rng: seed::rng(0),
        };
        for &(d, w) in &s.tokens {
            let z = rng.random_range(0..k);
            s.topic_of.push(z);
            s.doc_topic[[d, z]] += 1;
            s.topic_term[[z, w]] += 1;
            s.topic_total[z] += 1;
            s.doc_len[d] += 1;
        }
        s.rng = rng;
        Ok(s)
    }

    /// One full pass resampling every token's topic.
    pub fn sweep(&mut self) {
        let v_beta = self.n_terms as f64 * self.beta;
        for t in 0..self.tokens.len() {
            let (d, w) = self.tokens[t];
            let old = self.topic_of[t];
            self.doc_topic[[d, old]] -= 1;
            self.topic_term[[old, w]] -= 1;
            self.topic_total[old] -= 1;

            let mut total = 0.0;
            for z in 0..self.k {
                total += (self.doc_topic[[d, z]] as f64 + self.alpha)
                    * (self.topic_term[[z, w]] as f64 + self.beta)
                    / (self.topic_total[z] as f64 + v_beta);
                self.probs[z] = total;
            }
            let u = self.rng.random::<f64>() * total;
            let new = self.probs.iter().position(|&c| u < c).unwrap_or(self.k - 1);

            self.topic_of[t] = new;
            self.doc_topic[[d, new]] += 1;
            self.topic_term[[new, w]] += 1;
            self.topic_total[new] += 1;
        }
        debug_assert!(self.counts_consistent());
    }

    /// Σ_k n_dk = |d| for every document and Σ_w n_kw = n_k for every topic,
    /// and both agree with the per-token assignments.
    pub fn counts_consistent(&self) -> bool {
        let docs_ok =
            self.doc_topic.rows().into_iter().zip(&self.doc_len).all(|(row, &len)| row.sum() == len);
        let topics_ok =
            self.topic_term.rows().into_iter().zip(&self.topic_total).all(|(row, &n)| row.sum() == n);
        let mut recount = vec![0u32; self.k];
        for &z in &self.topic_of {
            recount[z] += 1;
        }
        docs_ok && topics_ok && recount == self.topic_total
    }

    pub fn doc_topic_counts(&self) -> &Array2<u32> {
        &self.doc_topic
    }

    pub fn result(&self, seed: u64, vocabulary: Vec<String>) -> TopicModelResult {
        let k = self.k as f64;
        let v_beta = self.n_terms as f64 * self.beta;
        let doc_topic = Array2::from_shape_fn(self.doc_topic.dim(), |(d, z)| {
            (self.doc_topic[[d, z]] as f64 + self.alpha) / (self.doc_len[d] as f64 + k * self.alpha)
        });
        let topic_term = Array2::from_shape_fn(self.topic_term.dim(), |(z, w)| {
            (self.topic_term[[z, w]] as f64 + self.beta) / (self.topic_total[z] as f64 + v_beta)
        });
        TopicModelResult {
            model_kind: ModelKind::Lda,
            k: self.k,
            seed,
            vocabulary,
            assignments: argmax_rows(&doc_topic),
            doc_topic,
            topic_term,
        }
    }
}

/// Latent Dirichlet allocation fitted by collapsed Gibbs sampling on a count matrix.
pub fn fit_lda(dtm: &DocTermMatrix, k: usize, params: LdaParams, seed: u64) -> Result<TopicModelResult> {
    ensure!(params.iterations >= 1, Precondition, "iterations must be at least 1");
    let mut sampler = LdaSampler::new(dtm, k, params.alpha, params.beta, seed)?;
    for _ in 0..params.iterations {
        sampler.sweep();
    }
    Ok(sampler.result(seed, dtm.vocabulary().terms().to_vec()))
}
