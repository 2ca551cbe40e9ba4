//! The three topic-model families behind one result type.

mod cluster;
mod lda;
mod nmf;

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{ensure, Error, Result};

pub use cluster::{c_tf_idf, fit_cluster_topics, kmeans, KMeansFit, RESTARTS as KMEANS_RESTARTS};
pub use lda::{fit_lda, LdaParams, LdaSampler};
pub use nmf::{factorize, factorize_from, fit_nmf, frobenius_objective, NmfFit, NmfParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lda,
    Nmf,
    Cluster,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lda => "lda",
            ModelKind::Nmf => "nmf",
            ModelKind::Cluster => "cluster",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lda" => Ok(ModelKind::Lda),
            "nmf" => Ok(ModelKind::Nmf),
            "cluster" | "bertopic" => Ok(ModelKind::Cluster),
            other => Err(Error::InvalidInput(format!("unknown model kind {other:?}"))),
        }
    }
}

/// A fitted topic model: soft (or one-hot) document-topic weights, topic-term
/// weights and the hard per-document assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModelResult {
    pub model_kind: ModelKind,
    pub k: usize,
    pub seed: u64,
    pub vocabulary: Vec<String>,
    pub doc_topic: Array2<f64>,
    pub topic_term: Array2<f64>,
    pub assignments: Vec<usize>,
}

/// Per topic, `(term, weight)` pairs in descending weight order.
pub type TopicKeywords = Vec<Vec<(String, f64)>>;

/// Row-wise argmax, lowest index on ties.
pub fn argmax_rows(m: &Array2<f64>) -> Vec<usize> {
    m.rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

pub fn assign_topics(result: &TopicModelResult) -> Vec<usize> {
    argmax_rows(&result.doc_topic)
}

/// The `n` heaviest terms of every topic; equal weights fall back to term order.
pub fn top_keywords(result: &TopicModelResult, n: usize) -> Result<TopicKeywords> {
    ensure!(n >= 1, Precondition, "n must be at least 1");
    let vocab = &result.vocabulary;
    ensure!(
        n <= vocab.len(),
        InvalidInput,
        "asked for {n} keywords but the vocabulary has {} terms",
        vocab.len()
    );
    Ok(result
        .topic_term
        .rows()
        .into_iter()
        .map(|row| {
            let mut idx: Vec<usize> = (0..vocab.len()).collect();
            idx.sort_by(|&a, &b| {
                row[b]
                    .partial_cmp(&row[a])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| vocab[a].cmp(&vocab[b]))
            });
            idx.into_iter().take(n).map(|j| (vocab[j].clone(), row[j])).collect()
        })
        .collect())
}

/// On-disk model document. Extra keys are carried but not interpreted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub model_kind: ModelKind,
    #[serde(rename = "K")]
    pub k: usize,
    pub seed: u64,
    pub vocabulary: Vec<String>,
    pub topic_term: Vec<Vec<f64>>,
    pub doc_topic: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coherence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_config: Option<Value>,
}

fn rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn from_rows(rows: &[Vec<f64>], ncols: usize, what: &str) -> Result<Array2<f64>> {
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    ensure!(rows.iter().all(|r| r.len() == ncols), InvalidInput, "{what} rows must all have {ncols} columns");
    Ok(Array2::from_shape_vec((rows.len(), ncols), flat).expect("shape checked"))
}

impl TopicModelResult {
    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            model_kind: self.model_kind,
            k: self.k,
            seed: self.seed,
            vocabulary: self.vocabulary.clone(),
            topic_term: rows(&self.topic_term),
            doc_topic: rows(&self.doc_topic),
            assignments: self.assignments.clone(),
            coherence: None,
            run_config: None,
        }
    }

    pub fn from_file(file: &ModelFile) -> Result<Self> {
        ensure!(file.topic_term.len() == file.k, InvalidInput, "topic_term must have K rows");
        let topic_term = from_rows(&file.topic_term, file.vocabulary.len(), "topic_term")?;
        let doc_topic = from_rows(&file.doc_topic, file.k, "doc_topic")?;
        ensure!(
            file.assignments.len() == doc_topic.nrows() && file.assignments.iter().all(|&a| a < file.k),
            InvalidInput,
            "assignments must have one id in [0, K) per document"
        );
        Ok(Self {
            model_kind: file.model_kind,
            k: file.k,
            seed: file.seed,
            vocabulary: file.vocabulary.clone(),
            doc_topic,
            topic_term,
            assignments: file.assignments.clone(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("finite values serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("malformed model file: {e}")))?;
        Self::from_file(&file)
    }
}
