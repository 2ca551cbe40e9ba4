//! The EMB1 file contract, built byte by byte the way an external exporter writes it.

use topicmetrics::embedding::{load_embeddings, write_embeddings};

fn emb1(n: u32, dim: u32, values: &[f32]) -> Vec<u8> {
    let mut out = b"EMB1".to_vec();
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn load(bytes: &[u8], expected_n: usize) -> topicmetrics::Result<topicmetrics::embedding::EmbeddingMatrix> {
    let file = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(file.path(), bytes).unwrap();
    load_embeddings(file.path(), expected_n)
}

fn err(bytes: &[u8], expected_n: usize) -> String {
    load(bytes, expected_n).unwrap_err().to_string()
}

#[test]
fn two_by_three_rows_in_order() {
    let emb = load(&emb1(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]), 2).unwrap();
    assert_eq!((emb.n_docs(), emb.dim()), (2, 3));
    assert_eq!(emb.row(0).to_vec(), vec![1.0, 0.0, 0.0]);
    assert_eq!(emb.row(1).to_vec(), vec![0.0, 1.0, 0.0]);
}

#[test]
fn contract_violations_are_reported() {
    let five = emb1(5, 1, &[0.0; 5]);
    assert!(err(&five, 4).contains("row count mismatch"));
    let mut truncated = emb1(2, 2, &[1.0; 4]);
    truncated.truncate(truncated.len() - 3);
    assert!(err(&truncated, 2).contains("payload size mismatch"));
    let mut magic = emb1(1, 1, &[1.0]);
    magic[3] = b'2';
    assert!(err(&magic, 1).contains("bad magic"));
    assert!(err(&emb1(1, 2, &[1.0, f32::NAN]), 1).contains("non-finite"));
    assert!(err(b"EMB", 1).contains("bad magic") || err(b"EMB", 1).contains("payload size mismatch"));
}

#[test]
fn writer_produces_the_same_bytes_an_exporter_would() {
    let bytes = emb1(3, 2, &[0.6, 0.8, -1.0, 0.0, 0.25, -0.5]);
    let emb = load(&bytes, 3).unwrap();
    let mut out = Vec::new();
    write_embeddings(&emb, &mut out).unwrap();
    assert_eq!(out, bytes);
}
