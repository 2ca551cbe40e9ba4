//! Planted-structure stance corpora for tests, demos and benchmarks.
//!
//! Every document belongs to one theme; a theme owns a private vocabulary
//! and has a probability of carrying the positive stance. Sentiment is
//! `link · (2y − 1) + noise`, clamped to [-1, 1], so `link = 0` makes it
//! independent of stance.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{Corpus, Document};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_docs: usize,
    pub n_themes: usize,
    pub theme_vocab: usize,
    pub shared_vocab: usize,
    pub doc_len: (usize, usize),
    /// Probability that a token is drawn from the document's theme vocabulary.
    pub theme_word_prob: f64,
    /// Probability that a document of a "positive" theme has stance 1 (and of a
    /// "negative" theme has stance 0). 1.0 makes themes stance-pure.
    pub theme_purity: f64,
    pub sentiment_link: f64,
    pub sentiment_noise: f64,
}

impl SyntheticConfig {
    /// Stance lives entirely in the topics; sentiment is independent noise.
    pub fn weak_link() -> Self {
        Self {
            n_docs: 400,
            n_themes: 10,
            theme_vocab: 12,
            shared_vocab: 30,
            doc_len: (10, 16),
            theme_word_prob: 0.7,
            theme_purity: 1.0,
            sentiment_link: 0.0,
            sentiment_noise: 0.5,
        }
    }

    /// Topics only partly stance-aligned; sentiment correlates with stance at r ≈ 0.5.
    pub fn moderate_link() -> Self {
        Self { theme_purity: 0.75, sentiment_link: 0.3, sentiment_noise: 0.5, ..Self::weak_link() }
    }
}

/// A pseudo-word that survives preprocessing unchanged: consonants ending in `o`.
pub fn pseudo_word(prefix: char, index: usize) -> String {
    const CONS: &[u8] = b"bcdfghjklmnpqrstvz";
    let n = CONS.len();
    format!(
        "{prefix}{}{}{}o",
        CONS[(index / (n * n)) % n] as char,
        CONS[(index / n) % n] as char,
        CONS[index % n] as char
    )
}

/// Theme of each document and the documents themselves (tokens filled, stance
/// and sentiment set). Themes alternate positive/negative; stances are balanced.
pub fn stance_corpus(cfg: &SyntheticConfig, seed: u64) -> (Corpus, Vec<usize>) {
    let mut rng = seed::rng(seed);
    let noise = Normal::new(0.0, cfg.sentiment_noise.max(1e-12)).expect("finite sigma");
    let mut docs = Vec::with_capacity(cfg.n_docs);
    let mut themes = Vec::with_capacity(cfg.n_docs);
    for i in 0..cfg.n_docs {
        // stance balanced by construction, theme drawn among those of its polarity
        let stance = (i % 2) as u8;
        let aligned = rng.random::<f64>() < cfg.theme_purity;
        let polarity = if aligned { stance as usize } else { 1 - stance as usize };
        let per_polarity = cfg.n_themes.div_ceil(2);
        let theme = loop {
            let t = 2 * rng.random_range(0..per_polarity) + polarity;
            if t < cfg.n_themes {
                break t;
            }
        };
        let len = rng.random_range(cfg.doc_len.0..=cfg.doc_len.1);
        let tokens: Vec<String> = (0..len)
            .map(|_| {
                if rng.random::<f64>() < cfg.theme_word_prob {
                    pseudo_word('t', theme * cfg.theme_vocab + rng.random_range(0..cfg.theme_vocab))
                } else {
                    pseudo_word('s', rng.random_range(0..cfg.shared_vocab))
                }
            })
            .collect();
        let sign = if stance == 1 { 1.0 } else { -1.0 };
        let sentiment = (cfg.sentiment_link * sign + noise.sample(&mut rng)).clamp(-1.0, 1.0);
        docs.push(Document {
            id: format!("d{i}"),
            raw_text: tokens.join(" "),
            tokens,
            stance: Some(stance),
            sentiment: Some(sentiment),
        });
        themes.push(theme);
    }
    (Corpus::new(docs).expect("ids are unique"), themes)
}
