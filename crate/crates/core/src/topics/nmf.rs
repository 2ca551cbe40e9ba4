use ndarray::{Array2, Zip};
use rand::Rng;

use super::{argmax_rows, ModelKind, TopicModelResult};
use crate::corpus::DocTermMatrix;
use crate::error::{ensure, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmfParams {
    pub iterations: usize,
    /// Stop once the relative objective decrease over one iteration falls below this.
    pub tol: f64,
    /// Added to every multiplicative-update denominator.
    pub epsilon: f64,
}

impl Default for NmfParams {
    fn default() -> Self {
        Self { iterations: 200, tol: 1e-4, epsilon: 1e-12 }
    }
}

/// Factors plus the objective `‖V − WH‖²_F` logged at initialization and after
/// every half-update (H then W).
#[derive(Debug, Clone, PartialEq)]
pub struct NmfFit {
    pub w: Array2<f64>,
    pub h: Array2<f64>,
    pub objectives: Vec<f64>,
}

pub fn frobenius_objective(v: &Array2<f64>, w: &Array2<f64>, h: &Array2<f64>) -> f64 {
    let wh = w.dot(h);
    Zip::from(v).and(&wh).fold(0.0, |acc, a, b| acc + (a - b) * (a - b))
}

/// Fit from a uniform (0, 1] random initialization.
pub fn factorize(v: &Array2<f64>, k: usize, params: NmfParams, seed: u64) -> Result<NmfFit> {
    ensure!(k >= 1, Precondition, "number of topics must be at least 1 (got {k})");
    let (n, m) = v.dim();
    let mut rng = seed::rng(seed);
    // random::<f64>() is in [0, 1); 1 - u lands in (0, 1]
    let w = Array2::from_shape_simple_fn((n, k), || 1.0 - rng.random::<f64>());
    let h = Array2::from_shape_simple_fn((k, m), || 1.0 - rng.random::<f64>());
    factorize_from(v, w, h, params)
}

/// Run the Lee–Seung multiplicative updates starting from the given factors.
pub fn factorize_from(
    v: &Array2<f64>,
    mut w: Array2<f64>,
    mut h: Array2<f64>,
    params: NmfParams,
) -> Result<NmfFit> {
    ensure!(
        v.iter().all(|x| *x >= 0.0 && x.is_finite()),
        InvalidInput,
        "NMF input has a negative or non-finite entry"
    );
    ensure!(
        w.nrows() == v.nrows() && h.ncols() == v.ncols() && w.ncols() == h.nrows(),
        DimensionMismatch,
        "factor shapes {:?}·{:?} do not match V {:?}",
        w.dim(),
        h.dim(),
        v.dim()
    );
    ensure!(w.ncols() >= 1, Precondition, "number of topics must be at least 1");
    let eps = params.epsilon;
    let mut objectives = vec![frobenius_objective(v, &w, &h)];
    for _ in 0..params.iterations {
        let before = *objectives.last().unwrap();

        let num = w.t().dot(v);
        let den = w.t().dot(&w).dot(&h);
        Zip::from(&mut h).and(&num).and(&den).for_each(|x, &a, &b| *x *= a / (b + eps));
        objectives.push(frobenius_objective(v, &w, &h));

        let num = v.dot(&h.t());
        let den = w.dot(&h.dot(&h.t()));
        Zip::from(&mut w).and(&num).and(&den).for_each(|x, &a, &b| *x *= a / (b + eps));
        let after = frobenius_objective(v, &w, &h);
        objectives.push(after);

        if before <= 0.0 || (before - after) / before < params.tol {
            break;
        }
    }
    Ok(NmfFit { w, h, objectives })
}

/// NMF topic model on a (TF-IDF) document-term matrix.
pub fn fit_nmf(dtm: &DocTermMatrix, k: usize, params: NmfParams, seed: u64) -> Result<TopicModelResult> {
    let fit = factorize(&dtm.to_dense(), k, params, seed)?;
    Ok(result_from_factors(fit, seed, dtm.vocabulary().terms().to_vec()))
}

pub(crate) fn result_from_factors(fit: NmfFit, seed: u64, vocabulary: Vec<String>) -> TopicModelResult {
    let k = fit.w.ncols();
    let mut doc_topic = fit.w;
    for mut row in doc_topic.rows_mut() {
        let s = row.sum();
        if s > 0.0 {
            row /= s;
        } else {
            row.fill(1.0 / k as f64);
        }
    }
    TopicModelResult {
        model_kind: ModelKind::Nmf,
        k,
        seed,
        vocabulary,
        assignments: argmax_rows(&doc_topic),
        doc_topic,
        topic_term: fit.h,
    }
}
