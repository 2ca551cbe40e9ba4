//! Document embeddings: the EMB1 interchange format, an LSA fallback embedder
//! and PCA reduction ahead of clustering.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView1};
use rand_distr::{Distribution, StandardNormal};

use crate::corpus::DocTermMatrix;
use crate::error::{ensure, Error, Result};
use crate::seed;

const MAGIC: &[u8; 4] = b"EMB1";
const OVERSAMPLING: usize = 8;
const POWER_ITERATIONS: usize = 2;

pub const DEFAULT_LSA_DIM: usize = 64;
pub const DEFAULT_REDUCED_DIM: usize = 5;

/// Dense `n_docs × dim` matrix, row `i` aligned with corpus document `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    values: Array2<f64>,
}

impl EmbeddingMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        ensure!(values.iter().all(|v| v.is_finite()), InvalidInput, "embedding contains non-finite values");
        Ok(Self { values })
    }

    pub fn n_docs(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }
}

pub fn load_embeddings(path: &Path, expected_n: usize) -> Result<EmbeddingMatrix> {
    let mut bytes = Vec::new();
    std::fs::File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| Error::io(path, e))?;
    decode_emb1(&bytes, expected_n)
}

pub fn decode_emb1(bytes: &[u8], expected_n: usize) -> Result<EmbeddingMatrix> {
    ensure!(bytes.len() >= 12 && &bytes[..4] == MAGIC, InvalidInput, "bad magic: not an EMB1 file");
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let payload = &bytes[12..];
    ensure!(
        payload.len() as u64 == n as u64 * dim as u64 * 4,
        InvalidInput,
        "payload size mismatch: header says {n}x{dim}, found {} bytes",
        payload.len()
    );
    ensure!(
        n == expected_n,
        InvalidInput,
        "row count mismatch: file has {n} rows, corpus has {expected_n} documents"
    );
    let values: Vec<f64> =
        payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
    let values = Array2::from_shape_vec((n, dim), values).expect("size checked");
    EmbeddingMatrix::new(values)
}

/// Serialize as EMB1. Values are narrowed to `f32`.
pub fn encode_emb1(emb: &EmbeddingMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + emb.values.len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(emb.n_docs() as u32).to_le_bytes());
    out.extend_from_slice(&(emb.dim() as u32).to_le_bytes());
    for v in emb.values.iter() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn write_embeddings<W: Write>(emb: &EmbeddingMatrix, mut out: W) -> std::io::Result<()> {
    out.write_all(&encode_emb1(emb))
}

/// Project documents onto the top `dim` right singular vectors of the TF-IDF
/// matrix and L2-normalize each nonzero row.
pub fn lsa_embed(dtm: &DocTermMatrix, dim: usize, seed: u64) -> Result<EmbeddingMatrix> {
    let (n, m) = (dtm.rows(), dtm.cols());
    ensure!(n > 0 && m > 0, InvalidInput, "empty document-term matrix");
    ensure!(dim >= 1 && dim <= n.min(m), Precondition, "embedding dim {dim} outside [1, {}]", n.min(m));
    let dense = dtm.to_dense();
    let a = DMatrix::from_fn(n, m, |i, j| dense[[i, j]]);
    let basis = top_right_singular_vectors(&a, dim, seed);
    let mut proj = to_ndarray(&(a * basis));
    for mut row in proj.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row /= norm;
        }
    }
    EmbeddingMatrix::new(proj)
}

/// PCA: project mean-centered rows onto their top `target_dim` principal axes.
pub fn reduce_dim(emb: &EmbeddingMatrix, target_dim: usize, seed: u64) -> Result<EmbeddingMatrix> {
    let (n, d) = emb.values.dim();
    ensure!(target_dim >= 1 && target_dim <= d, Precondition, "target_dim {target_dim} outside [1, {d}]");
    ensure!(n > 0, InvalidInput, "empty embedding matrix");
    let mean = emb.values.mean_axis(ndarray::Axis(0)).expect("n > 0");
    let centered = DMatrix::from_fn(n, d, |i, j| emb.values[[i, j]] - mean[j]);
    let basis = top_right_singular_vectors(&centered, target_dim, seed);
    EmbeddingMatrix::new(to_ndarray(&(centered * basis)))
}

/// Randomized subspace iteration (Halko, Martinsson & Tropp) returning an
/// `m × k` orthonormal basis for the dominant right singular subspace of `a`.
/// Columns beyond the numerical rank reachable by the sketch are zero.
pub fn top_right_singular_vectors(a: &DMatrix<f64>, k: usize, seed: u64) -> DMatrix<f64> {
    let (n, m) = a.shape();
    let sketch = (k + OVERSAMPLING).min(n.min(m));
    let mut rng = seed::rng(seed);
    let omega = DMatrix::from_fn(m, sketch, |_, _| StandardNormal.sample(&mut rng));
    let mut q = (a * omega).qr().q();
    for _ in 0..POWER_ITERATIONS {
        let z = (a.transpose() * &q).qr().q();
        q = (a * z).qr().q();
    }
    let b = q.transpose() * a;
    let svd = b.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| {
        svd.singular_values[y].partial_cmp(&svd.singular_values[x]).unwrap().then(x.cmp(&y))
    });
    let mut basis = DMatrix::zeros(m, k);
    for (col, &src) in order.iter().take(k).enumerate() {
        basis.set_column(col, &v_t.row(src).transpose());
    }
    basis
}

fn to_ndarray(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn(m.shape(), |(i, j)| m[(i, j)])
}
