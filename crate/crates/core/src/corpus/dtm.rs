use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Corpus, Vocabulary};
use crate::error::{ensure, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Count,
    Tfidf,
}

/// Sparse (CSR) nonnegative document × term matrix. Row `i` is `documents[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTermMatrix {
    vocabulary: Vocabulary,
    weighting: Weighting,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl DocTermMatrix {
    pub fn rows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn cols(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    /// Nonzero `(column, value)` pairs of row `i`, in ascending column order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.rows(), self.cols()));
        for i in 0..self.rows() {
            for (j, v) in self.row(i) {
                m[[i, j]] = v;
            }
        }
        m
    }

    /// Wrap a dense nonnegative matrix with synthetic term names `t0, t1, ...`.
    pub fn from_dense(dense: &Array2<f64>, weighting: Weighting) -> Result<Self> {
        ensure!(
            dense.iter().all(|v| *v >= 0.0 && v.is_finite()),
            InvalidInput,
            "document-term entries must be finite and nonnegative"
        );
        let (n, m) = dense.dim();
        let mut df = vec![0usize; m];
        let mut out = Self::empty(Vocabulary::default(), weighting);
        for i in 0..n {
            for j in 0..m {
                let v = dense[[i, j]];
                if v > 0.0 {
                    out.indices.push(j);
                    out.values.push(v);
                    df[j] += 1;
                }
            }
            out.indptr.push(out.indices.len());
        }
        out.vocabulary = Vocabulary::from_counts((0..m).map(|j| (format!("t{j}"), df[j].max(1))));
        Ok(out)
    }

    fn empty(vocabulary: Vocabulary, weighting: Weighting) -> Self {
        Self { vocabulary, weighting, indptr: vec![0], indices: Vec::new(), values: Vec::new() }
    }
}

/// Count or smoothed TF-IDF (`tf · (1 + ln((1+N)/(1+df)))`, rows L2-normalized)
/// over the corpus tokens, dropping terms seen in fewer than `min_df` documents.
pub fn build_doc_term_matrix(corpus: &Corpus, weighting: Weighting, min_df: usize) -> Result<DocTermMatrix> {
    ensure!(min_df >= 1, Precondition, "min_df must be at least 1");
    let vocabulary =
        Vocabulary::from_documents(corpus.documents.iter().map(|d| d.tokens.as_slice())).filtered(min_df);
    ensure!(!vocabulary.is_empty(), InvalidInput, "empty vocabulary after filtering (min_df = {min_df})");
    let n_docs = corpus.len() as f64;
    let idf: Vec<f64> =
        vocabulary.doc_freq.iter().map(|&df| 1.0 + ((1.0 + n_docs) / (1.0 + df as f64)).ln()).collect();

    let mut out = DocTermMatrix::empty(vocabulary, weighting);
    let mut counts = std::collections::BTreeMap::new();
    for doc in &corpus.documents {
        counts.clear();
        for t in &doc.tokens {
            if let Some(j) = out.vocabulary.index_of(t) {
                *counts.entry(j).or_insert(0.0) += 1.0;
            }
        }
        let start = out.values.len();
        for (&j, &c) in &counts {
            out.indices.push(j);
            out.values.push(match weighting {
                Weighting::Count => c,
                Weighting::Tfidf => c * idf[j],
            });
        }
        if weighting == Weighting::Tfidf {
            let row = &mut out.values[start..];
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
        }
        out.indptr.push(out.indices.len());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn corpus(docs: &[&[&str]]) -> Corpus {
        Corpus::from_tokens(docs.iter().map(|d| d.iter().map(|s| s.to_string()).collect()).collect())
    }

    #[test]
    fn counts() {
        let m = build_doc_term_matrix(&corpus(&[&["a", "b"], &["a"]]), Weighting::Count, 1).unwrap();
        assert_eq!(m.vocabulary().terms(), ["a", "b"]);
        assert_eq!(m.to_dense(), array![[1.0, 1.0], [1.0, 0.0]]);
    }

    #[test]
    fn min_df_filter() {
        let m = build_doc_term_matrix(&corpus(&[&["a", "b"], &["a"]]), Weighting::Count, 2).unwrap();
        assert_eq!(m.vocabulary().terms(), ["a"]);
        assert_eq!(m.to_dense(), array![[1.0], [1.0]]);
        assert!(build_doc_term_matrix(&corpus(&[&["a"], &["b"]]), Weighting::Count, 2).is_err());
    }

    #[test]
    fn tfidf_rows_are_unit() {
        let m = build_doc_term_matrix(&corpus(&[&["a"], &["a"]]), Weighting::Tfidf, 1).unwrap();
        assert_eq!(m.to_dense(), array![[1.0], [1.0]]);
        // a: df=2 -> idf 1; b: df=1 -> idf 1+ln(3/2)
        let m = build_doc_term_matrix(&corpus(&[&["a", "b"], &["a"]]), Weighting::Tfidf, 1).unwrap();
        let idf_b = 1.0 + 1.5f64.ln();
        let norm = (1.0 + idf_b * idf_b).sqrt();
        assert!((m.get(0, 0) - 1.0 / norm).abs() < 1e-15);
        assert!((m.get(0, 1) - idf_b / norm).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn counts_match_recount(docs in prop::collection::vec(
            prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e"]), 0..8), 1..6)) {
            let c = Corpus::from_tokens(docs.iter().map(|d| d.iter().map(|s| s.to_string()).collect()).collect());
            prop_assume!(c.documents.iter().any(|d| !d.tokens.is_empty()));
            let m = build_doc_term_matrix(&c, Weighting::Count, 1).unwrap();
            prop_assert_eq!(m.rows(), c.len());
            for (i, d) in c.documents.iter().enumerate() {
                prop_assert_eq!(&d.id, &i.to_string());
                for (j, term) in m.vocabulary().terms().iter().enumerate() {
                    let expected = d.tokens.iter().filter(|t| *t == term).count() as f64;
                    prop_assert_eq!(m.get(i, j), expected);
                }
            }
        }
    }
}
