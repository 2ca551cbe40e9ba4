//! Stance classifiers, F1 scoring, and the split / cross-validation protocol.

mod logistic;
mod split;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::features::{FeatureKind, FeatureMatrix};

pub use logistic::{logistic_gradient, logistic_loss, sigmoid, train_linear_svm, train_logistic};
pub use split::{kfold_indices, train_test_split};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierSpec {
    Logistic { l2: f64, learning_rate: f64, epochs: usize },
    Knn { k: usize },
    LinearSvm { c: f64, learning_rate: f64, epochs: usize },
}

impl ClassifierSpec {
    pub fn logistic() -> Self {
        ClassifierSpec::Logistic { l2: 1.0, learning_rate: 0.1, epochs: 500 }
    }

    pub fn knn() -> Self {
        ClassifierSpec::Knn { k: 5 }
    }

    pub fn linear_svm() -> Self {
        ClassifierSpec::LinearSvm { c: 1.0, learning_rate: 0.1, epochs: 500 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSpec::Logistic { .. } => "logistic",
            ClassifierSpec::Knn { .. } => "knn",
            ClassifierSpec::LinearSvm { .. } => "svm",
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ClassifierSpec::Logistic { l2, learning_rate, .. } => {
                ensure!(
                    l2 >= 0.0 && learning_rate > 0.0,
                    Precondition,
                    "logistic needs l2 >= 0 and learning_rate > 0"
                )
            }
            ClassifierSpec::Knn { k } => ensure!(k >= 1, Precondition, "knn needs k >= 1"),
            ClassifierSpec::LinearSvm { c, learning_rate, .. } => {
                ensure!(c > 0.0 && learning_rate > 0.0, Precondition, "svm needs c > 0 and learning_rate > 0")
            }
        }
        Ok(())
    }
}

impl fmt::Display for ClassifierSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierSpec {
    type Err = Error;

    /// Default hyperparameters for `logistic`, `knn` or `svm`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(Self::logistic()),
            "knn" => Ok(Self::knn()),
            "svm" | "linear_svm" => Ok(Self::linear_svm()),
            other => Err(Error::InvalidInput(format!("unknown classifier {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelState {
    Linear { weights: Array1<f64>, bias: f64 },
    Knn { x: Array2<f64>, y: Vec<u8> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub spec: ClassifierSpec,
    pub state: ModelState,
    pub feature_kind: FeatureKind,
    pub n_features: usize,
}

fn check_labels(y: &[u8], rows: usize) -> Result<()> {
    ensure!(rows > 0, InvalidInput, "empty training set");
    ensure!(y.len() == rows, DimensionMismatch, "{} labels for {rows} rows", y.len());
    if let Some(bad) = y.iter().find(|&&v| v > 1) {
        return Err(Error::InvalidInput(format!("label {bad} is not 0 or 1")));
    }
    Ok(())
}

/// Train a classifier. Logistic and SVM start from zero weights, so `_seed`
/// does not change their result; k-NN only stores the data.
pub fn fit_classifier(
    spec: &ClassifierSpec,
    x: &FeatureMatrix,
    y: &[u8],
    _seed: u64,
) -> Result<TrainedModel> {
    spec.validate()?;
    check_labels(y, x.n_docs())?;
    let state = match *spec {
        ClassifierSpec::Logistic { l2, learning_rate, epochs } => {
            let (weights, bias, _) = train_logistic(&x.values, y, l2, learning_rate, epochs);
            ModelState::Linear { weights, bias }
        }
        ClassifierSpec::LinearSvm { c, learning_rate, epochs } => {
            let (weights, bias) = train_linear_svm(&x.values, y, c, learning_rate, epochs);
            ModelState::Linear { weights, bias }
        }
        ClassifierSpec::Knn { .. } => ModelState::Knn { x: x.values.clone(), y: y.to_vec() },
    };
    Ok(TrainedModel { spec: *spec, state, feature_kind: x.kind, n_features: x.n_features() })
}

impl TrainedModel {
    /// Linear models: `w·x + b`. k-NN: fraction of positive neighbours minus ½.
    pub fn decision_values(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        ensure!(
            x.ncols() == self.n_features,
            DimensionMismatch,
            "model expects {} features, got {}",
            self.n_features,
            x.ncols()
        );
        Ok(match &self.state {
            ModelState::Linear { weights, bias } => (x.dot(weights) + *bias).to_vec(),
            ModelState::Knn { x: train, y } => {
                let k = match self.spec {
                    ClassifierSpec::Knn { k } => k.min(y.len()),
                    _ => unreachable!("knn state implies knn spec"),
                };
                x.axis_iter(Axis(0))
                    .map(|q| {
                        let mut dist: Vec<(f64, usize)> = train
                            .axis_iter(Axis(0))
                            .enumerate()
                            .map(|(i, p)| (p.iter().zip(q.iter()).map(|(a, b)| (a - b) * (a - b)).sum(), i))
                            .collect();
                        dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                        let pos = dist[..k].iter().filter(|&&(_, i)| y[i] == 1).count();
                        pos as f64 / k as f64 - 0.5
                    })
                    .collect()
            }
        })
    }
}

/// Label 1 iff the decision value is ≥ 0 (for k-NN: vote ties go to 1).
pub fn predict(model: &TrainedModel, x: &FeatureMatrix) -> Result<Vec<u8>> {
    Ok(model.decision_values(&x.values)?.into_iter().map(|d| (d >= 0.0) as u8).collect())
}

/// Binary F1 on the positive class; 0 when precision + recall = 0.
pub fn f1_score(y_true: &[u8], y_pred: &[u8]) -> Result<f64> {
    ensure!(
        y_true.len() == y_pred.len(),
        DimensionMismatch,
        "{} true labels vs {} predictions",
        y_true.len(),
        y_pred.len()
    );
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => tp += 1,
            (0, 1) => fp += 1,
            (1, 0) => fn_ += 1,
            _ => {}
        }
    }
    if tp == 0 {
        return Ok(0.0);
    }
    Ok(2.0 * tp as f64 / (2 * tp + fp + fn_) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub folds: Vec<f64>,
    pub mean: f64,
    /// Sample (n − 1) standard deviation across folds.
    pub std: f64,
}

impl EvalResult {
    pub fn from_folds(folds: Vec<f64>) -> Self {
        let n = folds.len() as f64;
        let mean = folds.iter().sum::<f64>() / n;
        let std = if folds.len() > 1 {
            (folds.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { folds, mean, std }
    }
}

/// Seeded stratified k-fold cross-validation; folds train in parallel.
pub fn cross_validate(
    x: &FeatureMatrix,
    y: &[u8],
    spec: &ClassifierSpec,
    folds: usize,
    seed: u64,
) -> Result<EvalResult> {
    check_labels(y, x.n_docs())?;
    let parts = kfold_indices(y, folds, seed)?;
    let scores = parts
        .par_iter()
        .map(|valid| {
            let mut in_valid = vec![false; y.len()];
            valid.iter().for_each(|&i| in_valid[i] = true);
            let train: Vec<usize> = (0..y.len()).filter(|&i| !in_valid[i]).collect();
            let y_train: Vec<u8> = train.iter().map(|&i| y[i]).collect();
            let y_valid: Vec<u8> = valid.iter().map(|&i| y[i]).collect();
            let model = fit_classifier(spec, &x.select_rows(&train), &y_train, seed)?;
            f1_score(&y_valid, &predict(&model, &x.select_rows(valid))?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(EvalResult::from_folds(scores))
}

/// Cross-validation on the training portion of a stratified split, plus
/// the F1 of a model refit on that portion and scored on the held-out rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolResult {
    pub cv: EvalResult,
    pub test_f1: f64,
    pub n_train: usize,
    pub n_test: usize,
}

pub fn evaluate(
    x: &FeatureMatrix,
    y: &[u8],
    spec: &ClassifierSpec,
    train_ratio: f64,
    folds: usize,
    seed: u64,
) -> Result<ProtocolResult> {
    check_labels(y, x.n_docs())?;
    let (train, test) = train_test_split(y.len(), train_ratio, Some(y), seed)?;
    let x_train = x.select_rows(&train);
    let y_train: Vec<u8> = train.iter().map(|&i| y[i]).collect();
    let cv = cross_validate(&x_train, &y_train, spec, folds, seed)?;
    let model = fit_classifier(spec, &x_train, &y_train, seed)?;
    let y_test: Vec<u8> = test.iter().map(|&i| y[i]).collect();
    let test_f1 = f1_score(&y_test, &predict(&model, &x.select_rows(&test))?)?;
    Ok(ProtocolResult { cv, test_f1, n_train: train.len(), n_test: test.len() })
}

/// The results document written by `classify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub dataset: String,
    pub feature_kind: FeatureKind,
    pub classifier: String,
    pub folds: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_f1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corr_stance_sentiment: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic_coherence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_config: Option<serde_json::Value>,
}
