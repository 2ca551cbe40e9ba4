use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;

use super::{ModelKind, TopicModelResult};
use crate::corpus::DocTermMatrix;
use crate::embedding::{reduce_dim, EmbeddingMatrix, DEFAULT_REDUCED_DIM};
use crate::error::{ensure, Result};
use crate::seed;

pub const MAX_ITERATIONS: usize = 100;
pub const RESTARTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    /// Cluster ids, relabeled so clusters are numbered by their lowest member index.
    pub assignments: Vec<usize>,
    pub centroids: Array2<f64>,
    pub sse: f64,
    /// Within-cluster SSE after every centroid update of the winning restart.
    pub sse_trace: Vec<f64>,
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: ArrayView1<f64>, centroids: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.rows().into_iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(points: &Array2<f64>, k: usize, rng: &mut impl Rng) -> Array2<f64> {
    let n = points.nrows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut dist: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), points.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in dist.iter().enumerate() {
                acc += d;
                if d > 0.0 && u < acc {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| dist.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            (0..n).find(|i| !chosen.contains(i)).unwrap()
        };
        chosen.push(next);
        for (i, d) in dist.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), points.row(next)));
        }
    }
    Array2::from_shape_fn((k, points.ncols()), |(c, j)| points[[chosen[c], j]])
}

fn update_centroids(points: &Array2<f64>, assignments: &[usize], centroids: &mut Array2<f64>) {
    let k = centroids.nrows();
    let mut sums = Array2::<f64>::zeros(centroids.dim());
    let mut counts = vec![0usize; k];
    for (i, &c) in assignments.iter().enumerate() {
        let mut row = sums.row_mut(c);
        row += &points.row(i);
        counts[c] += 1;
    }
    for (c, &count) in counts.iter().enumerate() {
        if count > 0 {
            let mean: Array1<f64> = &sums.row(c) / count as f64;
            centroids.row_mut(c).assign(&mean);
        }
    }
}

fn sse(points: &Array2<f64>, assignments: &[usize], centroids: &Array2<f64>) -> f64 {
    assignments.iter().enumerate().map(|(i, &c)| sq_dist(points.row(i), centroids.row(c))).sum()
}

/// Move the farthest point of a multi-member cluster into every empty cluster.
fn reseed_empty(points: &Array2<f64>, assignments: &mut [usize], centroids: &mut Array2<f64>) {
    let k = centroids.nrows();
    loop {
        let mut counts = vec![0usize; k];
        for &c in assignments.iter() {
            counts[c] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let mut far = None;
        let mut far_d = -1.0;
        for (i, &c) in assignments.iter().enumerate() {
            if counts[c] > 1 {
                let d = sq_dist(points.row(i), centroids.row(c));
                if d > far_d {
                    far = Some(i);
                    far_d = d;
                }
            }
        }
        let i = far.expect("k <= n guarantees a multi-member cluster");
        assignments[i] = empty;
        centroids.row_mut(empty).assign(&points.row(i));
    }
}

fn lloyd(points: &Array2<f64>, k: usize, rng: &mut impl Rng) -> KMeansFit {
    let mut centroids = plus_plus_init(points, k, rng);
    let mut assignments: Vec<usize> = points.rows().into_iter().map(|p| nearest(p, &centroids).0).collect();
    let mut trace = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        reseed_empty(points, &mut assignments, &mut centroids);
        update_centroids(points, &assignments, &mut centroids);
        trace.push(sse(points, &assignments, &centroids));
        let next: Vec<usize> = points.rows().into_iter().map(|p| nearest(p, &centroids).0).collect();
        if next == assignments {
            break;
        }
        assignments = next;
    }
    reseed_empty(points, &mut assignments, &mut centroids);
    update_centroids(points, &assignments, &mut centroids);
    let total = sse(points, &assignments, &centroids);
    KMeansFit { assignments, centroids, sse: total, sse_trace: trace }
}

/// Seeded k-means with k-means++ initialization, keeping the best of
/// [`RESTARTS`] runs by within-cluster SSE.
pub fn kmeans(points: &Array2<f64>, k: usize, seed: u64) -> Result<KMeansFit> {
    let n = points.nrows();
    ensure!(k >= 1 && k <= n, Precondition, "k = {k} must be in [1, {n}]");
    let mut rng = seed::rng(seed);
    let mut best: Option<KMeansFit> = None;
    for _ in 0..RESTARTS {
        let fit = lloyd(points, k, &mut rng);
        if best.as_ref().is_none_or(|b| fit.sse < b.sse) {
            best = Some(fit);
        }
    }
    Ok(relabel(best.unwrap()))
}

fn relabel(fit: KMeansFit) -> KMeansFit {
    let k = fit.centroids.nrows();
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    for &c in &fit.assignments {
        if map[c] == usize::MAX {
            map[c] = next;
            next += 1;
        }
    }
    for m in map.iter_mut().filter(|m| **m == usize::MAX) {
        *m = next;
        next += 1;
    }
    let mut centroids = fit.centroids.clone();
    for (old, &new) in map.iter().enumerate() {
        centroids.row_mut(new).assign(&fit.centroids.row(old));
    }
    KMeansFit { assignments: fit.assignments.iter().map(|&c| map[c]).collect(), centroids, ..fit }
}

/// Class-based TF-IDF: `W[c, t] = tf(t, c) · ln(1 + A / f(t))`, with `tf`
/// the count of `t` across documents of class `c`, `f(t)` its total count and
/// `A` the average number of tokens per class.
pub fn c_tf_idf(dtm: &DocTermMatrix, classes: &[usize], n_classes: usize) -> Result<Array2<f64>> {
    ensure!(
        classes.len() == dtm.rows(),
        DimensionMismatch,
        "{} class ids for {} documents",
        classes.len(),
        dtm.rows()
    );
    let mut members = vec![0usize; n_classes];
    for &c in classes {
        ensure!(c < n_classes, InvalidInput, "class id {c} outside [0, {n_classes})");
        members[c] += 1;
    }
    if let Some(empty) = members.iter().position(|&m| m == 0) {
        return Err(crate::Error::InvalidInput(format!("class {empty} has no documents")));
    }
    let mut tf = Array2::<f64>::zeros((n_classes, dtm.cols()));
    for (d, &c) in classes.iter().enumerate() {
        for (t, v) in dtm.row(d) {
            tf[[c, t]] += v;
        }
    }
    let term_totals = tf.sum_axis(ndarray::Axis(0));
    let avg_tokens = tf.sum() / n_classes as f64;
    Ok(Array2::from_shape_fn(tf.dim(), |(c, t)| {
        let f = tf[[c, t]];
        if f == 0.0 {
            0.0
        } else {
            f * (1.0 + avg_tokens / term_totals[t]).ln()
        }
    }))
}

/// Cluster topic model: PCA-reduce the embeddings, k-means them, describe
/// each cluster with class-based TF-IDF over the count matrix.
pub fn fit_cluster_topics(
    emb: &EmbeddingMatrix,
    dtm: &DocTermMatrix,
    k: usize,
    seed: u64,
) -> Result<TopicModelResult> {
    ensure!(
        emb.n_docs() == dtm.rows(),
        DimensionMismatch,
        "{} embedding rows for {} documents",
        emb.n_docs(),
        dtm.rows()
    );
    ensure!(k >= 1 && k <= dtm.rows(), Precondition, "k = {k} must be in [1, {}]", dtm.rows());
    let reduced = reduce_dim(emb, DEFAULT_REDUCED_DIM.min(emb.dim()), seed)?;
    let fit = kmeans(reduced.values(), k, seed::derive_seed(seed, "kmeans"))?;
    let topic_term = c_tf_idf(dtm, &fit.assignments, k)?;
    let mut doc_topic = Array2::zeros((dtm.rows(), k));
    for (d, &c) in fit.assignments.iter().enumerate() {
        doc_topic[[d, c]] = 1.0;
    }
    Ok(TopicModelResult {
        model_kind: ModelKind::Cluster,
        k,
        seed,
        vocabulary: dtm.vocabulary().terms().to_vec(),
        doc_topic,
        topic_term,
        assignments: fit.assignments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_doc_term_matrix, Corpus, Weighting};
    use ndarray::array;

    fn dtm(docs: &[&[&str]]) -> DocTermMatrix {
        let c = Corpus::from_tokens(docs.iter().map(|d| d.iter().map(|s| s.to_string()).collect()).collect());
        build_doc_term_matrix(&c, Weighting::Count, 1).unwrap()
    }

    #[test]
    fn ctfidf_hand_value() {
        let m = dtm(&[&["a", "a", "b"], &["b", "c"]]);
        let w = c_tf_idf(&m, &[0, 1], 2).unwrap();
        // A = 2.5, f_a = 2
        assert!((w[[0, 0]] - 2.0 * 2.25f64.ln()).abs() < 1e-12);
        assert!((w[[0, 0]] - 1.6219).abs() < 1e-4);
        assert_eq!(w[[1, 0]], 0.0);
        assert_eq!(w[[0, 2]], 0.0);
        assert!(w[[1, 2]] > 0.0);
    }

    #[test]
    fn ctfidf_single_class() {
        let m = dtm(&[&["a", "a", "b"], &["b", "c"]]);
        let w = c_tf_idf(&m, &[0, 0], 1).unwrap();
        for (t, tf) in [2.0f64, 2.0, 1.0].iter().enumerate() {
            assert!((w[[0, t]] - tf * (1.0 + 5.0 / tf).ln()).abs() < 1e-12);
        }
        assert!(c_tf_idf(&m, &[0, 0], 2).is_err());
    }

    #[test]
    fn separated_clouds() {
        let pts =
            array![[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [0.1, 0.1], [10.0, 10.0], [10.1, 10.0], [10.0, 10.1]];
        let fit = kmeans(&pts, 2, 5).unwrap();
        assert_eq!(fit.assignments, vec![0, 0, 0, 0, 1, 1, 1]);
        for w in fit.sse_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let m = dtm(&[&["a", "b"], &["c"], &["d", "a"]]);
        let emb = EmbeddingMatrix::new(array![[0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]).unwrap();
        let r = fit_cluster_topics(&emb, &m, 3, 0).unwrap();
        assert_eq!(r.assignments, vec![0, 1, 2]);
        for t in 0..3 {
            for j in 0..m.cols() {
                assert_eq!(r.topic_term[[t, j]] > 0.0, m.get(t, j) > 0.0);
            }
        }
        assert!(fit_cluster_topics(&emb, &m, 4, 0).is_err());
    }
}
