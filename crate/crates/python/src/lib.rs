//! Python bindings: corpora, topic models, coherence, features and evaluation.
//!
//! Matrices cross the boundary as lists of rows.

use ndarray::Array2;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use topicmetrics::classify::{self, ClassifierSpec};
use topicmetrics::coherence::{self, CoherenceConfig, Measure, ModelSpec};
use topicmetrics::corpus::{self, CorpusFormat, PreprocessOptions, Weighting};
use topicmetrics::embedding::{self, EmbeddingMatrix};
use topicmetrics::features::{self, FeatureKind, FeatureMatrix};
use topicmetrics::synthetic::{self, SyntheticConfig};
use topicmetrics::topics::{self, ModelKind, TopicModelResult};
use topicmetrics::{report, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

fn to_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn from_rows(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err("rows must all have the same length"));
    }
    let n = rows.len();
    Array2::from_shape_vec((n, ncols), rows.into_iter().flatten().collect())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

fn feature_matrix(rows: Vec<Vec<f64>>) -> PyResult<FeatureMatrix> {
    let values = from_rows(rows)?;
    let p = values.ncols();
    Ok(FeatureMatrix {
        values,
        column_labels: (0..p).map(|i| format!("f{i}")).collect(),
        kind: FeatureKind::Combined,
    })
}

#[pyclass(name = "Corpus", module = "topicmetrics_py")]
pub struct PyCorpus {
    inner: corpus::Corpus,
}

#[pymethods]
impl PyCorpus {
    /// Build from parallel lists; `stances` and `sentiments` may be omitted.
    #[new]
    #[pyo3(signature = (texts, stances=None, sentiments=None))]
    fn new(texts: Vec<String>, stances: Option<Vec<u8>>, sentiments: Option<Vec<f64>>) -> PyResult<Self> {
        let n = texts.len();
        if stances.as_ref().is_some_and(|s| s.len() != n) || sentiments.as_ref().is_some_and(|s| s.len() != n)
        {
            return Err(PyValueError::new_err("texts, stances and sentiments must have equal lengths"));
        }
        let docs = texts
            .into_iter()
            .enumerate()
            .map(|(i, text)| corpus::Document {
                stance: stances.as_ref().map(|s| s[i]),
                sentiment: sentiments.as_ref().map(|s| s[i]),
                ..corpus::Document::new(i.to_string(), text)
            })
            .collect();
        let inner = corpus::Corpus::new(docs).map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Load a JSONL or CSV corpus (format from the extension).
    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        let inner = corpus::load_corpus(&path, CorpusFormat::from_path(&path)).map_err(py_err)?;
        Ok(Self { inner })
    }

    /// A planted-structure stance corpus; `link` is "weak" or "moderate".
    #[staticmethod]
    #[pyo3(signature = (link="weak", n_docs=400, seed=0))]
    fn synthetic(link: &str, n_docs: usize, seed: u64) -> PyResult<Self> {
        let base = match link {
            "weak" => SyntheticConfig::weak_link(),
            "moderate" => SyntheticConfig::moderate_link(),
            other => return Err(PyValueError::new_err(format!("unknown link {other:?}"))),
        };
        let cfg = SyntheticConfig { n_docs, ..base };
        Ok(Self { inner: synthetic::stance_corpus(&cfg, seed).0 })
    }

    #[pyo3(signature = (stem=true))]
    fn preprocess(&mut self, stem: bool) {
        self.inner.preprocess(&PreprocessOptions { stem, ..PreprocessOptions::default() });
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn tokens(&self) -> Vec<Vec<String>> {
        self.inner.documents.iter().map(|d| d.tokens.clone()).collect()
    }

    #[getter]
    fn vocabulary(&self) -> Vec<String> {
        self.inner.vocabulary.terms().to_vec()
    }

    #[getter]
    fn stances(&self) -> PyResult<Vec<u8>> {
        self.inner.stances().map_err(py_err)
    }

    #[getter]
    fn sentiments(&self) -> PyResult<Vec<f64>> {
        Ok(features::sentiment_features(&self.inner, features::SentimentSource::Column)
            .map_err(py_err)?
            .values
            .column(0)
            .to_vec())
    }

    /// Dense document-term matrix, "count" or "tfidf".
    #[pyo3(signature = (weighting="count"))]
    fn doc_term_matrix(&self, weighting: &str) -> PyResult<Vec<Vec<f64>>> {
        let w = match weighting {
            "count" => Weighting::Count,
            "tfidf" => Weighting::Tfidf,
            other => return Err(PyValueError::new_err(format!("unknown weighting {other:?}"))),
        };
        let dtm = corpus::build_doc_term_matrix(&self.inner, w, 1).map_err(py_err)?;
        Ok(to_rows(&dtm.to_dense()))
    }

    fn __repr__(&self) -> String {
        format!("Corpus(n_docs={}, n_terms={})", self.inner.len(), self.inner.vocabulary.len())
    }
}

#[pyclass(name = "TopicModel", module = "topicmetrics_py")]
pub struct PyTopicModel {
    inner: TopicModelResult,
}

#[pymethods]
impl PyTopicModel {
    #[getter]
    fn model_kind(&self) -> &'static str {
        self.inner.model_kind.as_str()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }

    #[getter]
    fn assignments(&self) -> Vec<usize> {
        self.inner.assignments.clone()
    }

    #[getter]
    fn doc_topic(&self) -> Vec<Vec<f64>> {
        to_rows(&self.inner.doc_topic)
    }

    #[getter]
    fn topic_term(&self) -> Vec<Vec<f64>> {
        to_rows(&self.inner.topic_term)
    }

    #[pyo3(signature = (n=10))]
    fn top_keywords(&self, n: usize) -> PyResult<Vec<Vec<(String, f64)>>> {
        topics::top_keywords(&self.inner, n).map_err(py_err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: TopicModelResult::from_json(text).map_err(py_err)? })
    }

    fn __repr__(&self) -> String {
        format!("TopicModel(kind={}, k={})", self.inner.model_kind, self.inner.k)
    }
}

#[pyclass(name = "EvalResult", module = "topicmetrics_py", get_all)]
pub struct PyEvalResult {
    folds: Vec<f64>,
    mean: f64,
    std: f64,
}

#[pymethods]
impl PyEvalResult {
    fn __repr__(&self) -> String {
        format!("EvalResult(mean={:.4}, std={:.4}, folds={})", self.mean, self.std, self.folds.len())
    }
}

#[pyfunction]
#[pyo3(signature = (text, stem=true))]
fn preprocess_text(text: &str, stem: bool) -> Vec<String> {
    corpus::preprocess_text(text, &PreprocessOptions { stem, ..PreprocessOptions::default() })
}

/// Fit "lda", "nmf" or "cluster" with library defaults. `embeddings` (rows)
/// is used by the cluster model; LSA embeddings are computed when omitted.
#[pyfunction]
#[pyo3(signature = (corpus, model, k, seed=0, embeddings=None, lda_iterations=None))]
fn fit_topics(
    py: Python<'_>,
    corpus: &PyCorpus,
    model: &str,
    k: usize,
    seed: u64,
    embeddings: Option<Vec<Vec<f64>>>,
    lda_iterations: Option<usize>,
) -> PyResult<PyTopicModel> {
    let kind: ModelKind = parse(model)?;
    let mut spec = ModelSpec::default_for(kind);
    if let (ModelSpec::Lda { iterations, .. }, Some(n)) = (&mut spec, lda_iterations) {
        *iterations = n;
    }
    let emb = embeddings.map(|rows| EmbeddingMatrix::new(from_rows(rows)?).map_err(py_err)).transpose()?;
    let inner =
        py.detach(|| coherence::fit_model(&spec, &corpus.inner, k, emb.as_ref(), seed)).map_err(py_err)?;
    Ok(PyTopicModel { inner })
}

#[pyfunction]
#[pyo3(signature = (corpus, dim=64, seed=0))]
fn lsa_embed(corpus: &PyCorpus, dim: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    let tfidf = corpus::build_doc_term_matrix(&corpus.inner, Weighting::Tfidf, 1).map_err(py_err)?;
    let emb = embedding::lsa_embed(&tfidf, dim, seed).map_err(py_err)?;
    Ok(to_rows(emb.values()))
}

#[pyfunction]
fn load_embeddings(path: std::path::PathBuf, expected_n: usize) -> PyResult<Vec<Vec<f64>>> {
    Ok(to_rows(embedding::load_embeddings(&path, expected_n).map_err(py_err)?.values()))
}

/// Mean per-topic coherence of the model's top keywords against `corpus`.
#[pyfunction]
#[pyo3(signature = (model, corpus, measure="npmi", top_n=10))]
fn coherence_score(model: &PyTopicModel, corpus: &PyCorpus, measure: &str, top_n: usize) -> PyResult<f64> {
    let config = CoherenceConfig { measure: parse::<Measure>(measure)?, top_n, ..CoherenceConfig::default() };
    let keywords =
        topics::top_keywords(&model.inner, top_n.min(model.inner.vocabulary.len())).map_err(py_err)?;
    coherence::coherence_score(&keywords, &corpus.inner, &config).map_err(py_err)
}

#[pyfunction]
fn one_hot_topics(assignments: Vec<usize>, k: usize) -> PyResult<Vec<Vec<f64>>> {
    Ok(to_rows(&features::one_hot_topics(&assignments, k).map_err(py_err)?.values))
}

#[pyfunction]
fn f1_score(y_true: Vec<u8>, y_pred: Vec<u8>) -> PyResult<f64> {
    classify::f1_score(&y_true, &y_pred).map_err(py_err)
}

/// Stratified k-fold F1 for "logistic", "knn" or "svm" with default hyperparameters.
#[pyfunction]
#[pyo3(signature = (x, y, classifier="logistic", folds=10, seed=0))]
fn cross_validate(
    py: Python<'_>,
    x: Vec<Vec<f64>>,
    y: Vec<u8>,
    classifier: &str,
    folds: usize,
    seed: u64,
) -> PyResult<PyEvalResult> {
    let spec: ClassifierSpec = parse(classifier)?;
    let x = feature_matrix(x)?;
    let r = py.detach(|| classify::cross_validate(&x, &y, &spec, folds, seed)).map_err(py_err)?;
    Ok(PyEvalResult { folds: r.folds, mean: r.mean, std: r.std })
}

#[pyfunction]
fn improvement(metric_f1: f64, sentiment_f1: f64) -> PyResult<f64> {
    report::improvement(metric_f1, sentiment_f1).map_err(py_err)
}

#[pyfunction]
fn enhancement(cluster_best: f64, lda_best: f64, nmf_best: f64) -> PyResult<f64> {
    coherence::enhancement(cluster_best, lda_best, nmf_best).map_err(py_err)
}

#[pyfunction]
fn point_biserial(stance: Vec<u8>, sentiment: Vec<f64>) -> PyResult<f64> {
    report::point_biserial(&stance, &sentiment).map_err(py_err)
}

#[pymodule]
fn topicmetrics_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyTopicModel>()?;
    m.add_class::<PyEvalResult>()?;
    m.add_function(wrap_pyfunction!(preprocess_text, m)?)?;
    m.add_function(wrap_pyfunction!(fit_topics, m)?)?;
    m.add_function(wrap_pyfunction!(lsa_embed, m)?)?;
    m.add_function(wrap_pyfunction!(load_embeddings, m)?)?;
    m.add_function(wrap_pyfunction!(coherence_score, m)?)?;
    m.add_function(wrap_pyfunction!(one_hot_topics, m)?)?;
    m.add_function(wrap_pyfunction!(f1_score, m)?)?;
    m.add_function(wrap_pyfunction!(cross_validate, m)?)?;
    m.add_function(wrap_pyfunction!(improvement, m)?)?;
    m.add_function(wrap_pyfunction!(enhancement, m)?)?;
    m.add_function(wrap_pyfunction!(point_biserial, m)?)?;
    Ok(())
}
