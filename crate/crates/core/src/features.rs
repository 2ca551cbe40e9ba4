//! Topic, sentiment and combined feature matrices.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{concatenate, s, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{ensure, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Topic,
    Sentiment,
    Combined,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Topic => "topic",
            FeatureKind::Sentiment => "sentiment",
            FeatureKind::Combined => "combined",
        })
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "topic" => Ok(FeatureKind::Topic),
            "sentiment" => Ok(FeatureKind::Sentiment),
            "combined" => Ok(FeatureKind::Combined),
            other => Err(Error::InvalidInput(format!("unknown feature kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Array2<f64>,
    pub column_labels: Vec<String>,
    pub kind: FeatureKind,
}

impl FeatureMatrix {
    pub fn n_docs(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    /// Rows `idx`, in that order.
    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            values: self.values.select(Axis(0), idx),
            column_labels: self.column_labels.clone(),
            kind: self.kind,
        }
    }

    /// Columns `[start, end)` as a new matrix of the given kind.
    pub fn slice_columns(&self, start: usize, end: usize, kind: FeatureKind) -> FeatureMatrix {
        FeatureMatrix {
            values: self.values.slice(s![.., start..end]).to_owned(),
            column_labels: self.column_labels[start..end].to_vec(),
            kind,
        }
    }
}

/// Dummy-variable encoding of hard topic assignments, all K columns kept.
pub fn one_hot_topics(assignments: &[usize], k: usize) -> Result<FeatureMatrix> {
    ensure!(k >= 1, Precondition, "K must be at least 1");
    let mut values = Array2::zeros((assignments.len(), k));
    for (i, &a) in assignments.iter().enumerate() {
        ensure!(a < k, InvalidInput, "topic id {a} of document {i} is outside [0, {k})");
        values[[i, a]] = 1.0;
    }
    Ok(FeatureMatrix {
        values,
        column_labels: (0..k).map(|t| format!("topic_{t}")).collect(),
        kind: FeatureKind::Topic,
    })
}

/// Token → polarity map for the demo lexicon scorer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon(pub HashMap<String, f64>);

impl Lexicon {
    /// Lines of `token<TAB>polarity`; blank lines and `#` comments skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| Error::Parse { line: i + 1, msg: msg.to_string() };
            let (token, pol) = line.split_once('\t').ok_or_else(|| bad("expected token<TAB>polarity"))?;
            let pol: f64 = pol.trim().parse().map_err(|_| bad("polarity is not a number"))?;
            if !(-1.0..=1.0).contains(&pol) {
                return Err(bad("polarity out of range"));
            }
            map.insert(token.trim().to_string(), pol);
        }
        Ok(Lexicon(map))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// `Σ polarity / max(1, |tokens|)`, clamped to [-1, 1].
    pub fn score(&self, tokens: &[String]) -> f64 {
        let sum: f64 = tokens.iter().filter_map(|t| self.0.get(t)).sum();
        (sum / tokens.len().max(1) as f64).clamp(-1.0, 1.0)
    }
}

#[derive(Debug, Clone)]
pub enum SentimentSource<'a> {
    /// The corpus' own sentiment values.
    Column,
    Lexicon(&'a Lexicon),
}

pub fn sentiment_features(corpus: &Corpus, source: SentimentSource<'_>) -> Result<FeatureMatrix> {
    let scores = corpus
        .documents
        .iter()
        .map(|d| match &source {
            SentimentSource::Column => d
                .sentiment
                .ok_or_else(|| Error::InvalidInput(format!("document {:?} has no sentiment value", d.id))),
            SentimentSource::Lexicon(lex) => Ok(lex.score(&d.tokens)),
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(FeatureMatrix {
        values: Array2::from_shape_vec((scores.len(), 1), scores).expect("one column"),
        column_labels: vec!["sentiment".into()],
        kind: FeatureKind::Sentiment,
    })
}

/// Topic columns followed by the sentiment column.
pub fn combine_features(topic: &FeatureMatrix, sentiment: &FeatureMatrix) -> Result<FeatureMatrix> {
    ensure!(
        topic.n_docs() == sentiment.n_docs(),
        DimensionMismatch,
        "{} topic rows vs {} sentiment rows",
        topic.n_docs(),
        sentiment.n_docs()
    );
    let values =
        concatenate(Axis(1), &[topic.values.view(), sentiment.values.view()]).expect("row counts checked");
    let mut column_labels = topic.column_labels.clone();
    column_labels.extend(sentiment.column_labels.iter().cloned());
    Ok(FeatureMatrix { values, column_labels, kind: FeatureKind::Combined })
}
