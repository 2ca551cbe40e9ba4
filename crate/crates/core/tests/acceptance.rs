//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Runs without the libtest harness so the output stays one line per
//! criterion; `cargo test --test acceptance` prints the table.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topicmetrics::classify::{cross_validate, f1_score, logistic_gradient, logistic_loss, ClassifierSpec};
use topicmetrics::coherence::{default_embeddings, enhancement, npmi, topic_coherence, CoherenceConfig};
use topicmetrics::corpus::{build_doc_term_matrix, Corpus, Weighting};
use topicmetrics::features::{combine_features, one_hot_topics, sentiment_features, SentimentSource};
use topicmetrics::report::{improvement, point_biserial};
use topicmetrics::synthetic::{pseudo_word, stance_corpus, SyntheticConfig};
use topicmetrics::topics::{
    c_tf_idf, factorize, fit_cluster_topics, fit_lda, LdaParams, LdaSampler, NmfParams,
};

type Check = fn() -> Result<String, String>;

fn main() {
    let criteria: [(&str, u64, Check); 9] = [
        ("table arithmetic", 1, table_arithmetic),
        ("weak-link synthetic: topic beats sentiment", 60, weak_link),
        ("moderate-link synthetic: combined at least as good", 60, moderate_link),
        ("NMF objective monotonicity", 10, nmf_monotone),
        ("LDA conservation, K=1, separation", 30, lda_checks),
        ("logistic gradient vs finite differences", 5, gradient_check),
        ("oracle equivalence", 10, oracles),
        ("coherence ordering and exact NPMI", 30, coherence_ordering),
        ("end-to-end determinism at seed 7", 60, determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(d) if elapsed > Duration::from_secs(*budget) => Err(format!("{d}; over the {budget}s budget")),
            other => other,
        };
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} [{}] {name} ({:.2}s / {budget}s): {detail}", i + 1, elapsed.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn near(label: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{label}: got {got:.6}, want {want} ± {tol}"))
    }
}

fn table_arithmetic() -> Result<String, String> {
    let coherence = [
        ("WM", 0.7539, 0.4006, 0.6329, 19.12),
        ("KC", 0.9431, 0.4518, 0.6116, 54.20),
        ("MOTN", 0.5113, 0.4216, 0.4367, 17.08),
    ];
    for (name, b, lda, nmf, want) in coherence {
        near(name, enhancement(b, lda, nmf).map_err(|e| e.to_string())?, want, 0.005)?;
    }
    let f1 = [
        ("WM", 0.9347, 0.9281, 0.9366, 0.71, 0.92),
        ("KC", 0.8373, 0.7039, 0.8354, 18.95, 18.68),
        ("MOTN", 0.6030, 0.5705, 0.6516, 5.70, 14.22),
    ];
    for (name, topic, sent, comb, want_t, want_c) in f1 {
        near(name, improvement(topic, sent).map_err(|e| e.to_string())?, want_t, 0.005)?;
        near(name, improvement(comb, sent).map_err(|e| e.to_string())?, want_c, 0.005)?;
    }
    Ok("3 enhancement and 6 improvement percentages within 0.005 pp".into())
}

struct SeedRun {
    r: f64,
    topic: f64,
    sentiment: f64,
    combined: f64,
}

/// Cluster topics (K=10) on LSA embeddings, then logistic 10-fold CV on each feature set.
fn synthetic_run(cfg: &SyntheticConfig, seed: u64) -> SeedRun {
    let (corpus, _) = stance_corpus(cfg, seed);
    let y = corpus.stances().unwrap();
    let counts = build_doc_term_matrix(&corpus, Weighting::Count, 1).unwrap();
    let emb = default_embeddings(&corpus, seed).unwrap();
    let model = fit_cluster_topics(&emb, &counts, 10, seed).unwrap();
    let topic = one_hot_topics(&model.assignments, 10).unwrap();
    let sentiment = sentiment_features(&corpus, SentimentSource::Column).unwrap();
    let combined = combine_features(&topic, &sentiment).unwrap();
    let spec = ClassifierSpec::logistic();
    let cv = |x| cross_validate(x, &y, &spec, 10, seed).unwrap().mean;
    SeedRun {
        r: point_biserial(&y, sentiment.values.column(0).as_slice().unwrap()).unwrap(),
        topic: cv(&topic),
        sentiment: cv(&sentiment),
        combined: cv(&combined),
    }
}

fn weak_link() -> Result<String, String> {
    let cfg = SyntheticConfig::weak_link();
    let runs: Vec<SeedRun> = (0..20).map(|s| synthetic_run(&cfg, s)).collect();
    let max_r = runs.iter().map(|r| r.r.abs()).fold(0.0, f64::max);
    if max_r >= 0.1 {
        return Err(format!("planted correlation not weak: max |r| = {max_r:.3}"));
    }
    let wins = runs.iter().filter(|r| r.topic >= r.sentiment + 0.15).count();
    let gap = runs.iter().map(|r| r.topic - r.sentiment).sum::<f64>() / 20.0;
    let detail = format!(
        "{wins}/20 seeds with F1(topic) ≥ F1(sentiment) + 0.15, mean gap {gap:.3}, max |r| {max_r:.3}"
    );
    if wins >= 19 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn moderate_link() -> Result<String, String> {
    let cfg = SyntheticConfig::moderate_link();
    let runs: Vec<SeedRun> = (0..20).map(|s| synthetic_run(&cfg, s)).collect();
    let mean_r = runs.iter().map(|r| r.r).sum::<f64>() / 20.0;
    let wins = runs.iter().filter(|r| r.combined >= r.topic.max(r.sentiment) - 0.01).count();
    let detail = format!("{wins}/20 seeds with F1(combined) ≥ max − 0.01, mean r {mean_r:.3}");
    if wins >= 18 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn nmf_monotone() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let params = NmfParams { iterations: 100, tol: 0.0, ..NmfParams::default() };
    let mut steps = 0;
    for instance in 0..200 {
        let (n, m, k) = (rng.random_range(1..=30), rng.random_range(1..=30), rng.random_range(1..=5));
        let v = Array2::from_shape_simple_fn((n, m), || {
            if rng.random::<f64>() < 0.3 {
                0.0
            } else {
                rng.random::<f64>()
            }
        });
        let fit = factorize(&v, k, params, instance).map_err(|e| e.to_string())?;
        for (i, pair) in fit.objectives.windows(2).enumerate() {
            if pair[1] > pair[0] + 1e-9 {
                return Err(format!(
                    "instance {instance} ({n}x{m}, K={k}) rose at update {i}: {} -> {}",
                    pair[0], pair[1]
                ));
            }
        }
        steps += fit.objectives.len() - 1;
    }
    Ok(format!("200 instances, {steps} half-updates, none rose by more than 1e-9"))
}

fn random_corpus(rng: &mut ChaCha8Rng, docs: usize, vocab: usize, max_len: usize) -> Corpus {
    let tokens = (0..docs)
        .map(|_| {
            let len = rng.random_range(1..=max_len);
            (0..len).map(|_| format!("w{}", rng.random_range(0..vocab))).collect()
        })
        .collect();
    Corpus::from_tokens(tokens)
}

/// Straightforward collapsed Gibbs sampler over (document, term id) tokens,
/// drawing from the same ChaCha8 stream in the same order.
fn reference_gibbs(
    tokens: &[(usize, usize)],
    shape: (usize, usize, usize),
    (alpha, beta): (f64, f64),
    sweeps: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let (n_docs, n_terms, k) = shape;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ndk = vec![vec![0i64; k]; n_docs];
    let mut nkw = vec![vec![0i64; n_terms]; k];
    let mut nk = vec![0i64; k];
    let mut z: Vec<usize> = Vec::new();
    for &(d, w) in tokens {
        let t = rng.random_range(0..k);
        z.push(t);
        ndk[d][t] += 1;
        nkw[t][w] += 1;
        nk[t] += 1;
    }
    for _ in 0..sweeps {
        for (i, &(d, w)) in tokens.iter().enumerate() {
            let old = z[i];
            ndk[d][old] -= 1;
            nkw[old][w] -= 1;
            nk[old] -= 1;
            let mut cumulative = Vec::with_capacity(k);
            let mut acc = 0.0;
            for t in 0..k {
                acc += (ndk[d][t] as f64 + alpha) * (nkw[t][w] as f64 + beta)
                    / (nk[t] as f64 + n_terms as f64 * beta);
                cumulative.push(acc);
            }
            let u = rng.random::<f64>() * acc;
            let new = cumulative.iter().position(|&c| u < c).unwrap_or(k - 1);
            z[i] = new;
            ndk[d][new] += 1;
            nkw[new][w] += 1;
            nk[new] += 1;
        }
    }
    ndk.iter()
        .map(|row| {
            let len: i64 = row.iter().sum();
            row.iter().map(|&c| (c as f64 + alpha) / (len as f64 + k as f64 * alpha)).collect()
        })
        .collect()
}

fn lda_checks() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // conservation after every sweep
    let mut sweeps = 0;
    for trial in 0..20 {
        let corpus = random_corpus(&mut rng, 15, 12, 20);
        let dtm = build_doc_term_matrix(&corpus, Weighting::Count, 1).unwrap();
        let k = rng.random_range(1..=6);
        let mut sampler = LdaSampler::new(&dtm, k, 0.5, 0.1, trial).map_err(|e| e.to_string())?;
        for s in 0..50 {
            sampler.sweep();
            sweeps += 1;
            if !sampler.counts_consistent() {
                return Err(format!("counts inconsistent in trial {trial} after sweep {s}"));
            }
            for (d, row) in sampler.doc_topic_counts().rows().into_iter().enumerate() {
                if row.sum() as usize != corpus.documents[d].tokens.len() {
                    return Err(format!("trial {trial}: document {d} lost tokens"));
                }
            }
        }
    }
    // K = 1
    let corpus = random_corpus(&mut rng, 30, 20, 15);
    let dtm = build_doc_term_matrix(&corpus, Weighting::Count, 1).unwrap();
    let one = fit_lda(&dtm, 1, LdaParams { iterations: 20, ..LdaParams::for_k(1) }, 3)
        .map_err(|e| e.to_string())?;
    if one.assignments.iter().any(|&a| a != 0) || one.doc_topic.iter().any(|&p| p != 1.0) {
        return Err("K=1 must give all-zero assignments and an all-ones doc_topic column".into());
    }
    // disjoint vocabularies
    let docs: Vec<Vec<String>> = (0..40)
        .map(|i| {
            let pair = if i % 2 == 0 { ["a", "b"] } else { ["c", "d"] };
            (0..8).map(|_| pair[rng.random_range(0..2)].to_string()).collect()
        })
        .collect();
    let corpus = Corpus::from_tokens(docs.clone());
    let dtm = build_doc_term_matrix(&corpus, Weighting::Count, 1).unwrap();
    let params = LdaParams { alpha: 0.1, beta: 0.1, iterations: 500 };
    let seed = 2024;
    let fit = fit_lda(&dtm, 2, params, seed).map_err(|e| e.to_string())?;
    let min_mass =
        fit.doc_topic.rows().into_iter().map(|r| r.iter().copied().fold(0.0, f64::max)).fold(1.0, f64::min);
    if min_mass < 0.8 {
        return Err(format!("dominant topic mass {min_mass:.3} < 0.8"));
    }
    let even = fit.assignments[0];
    for (i, &a) in fit.assignments.iter().enumerate() {
        if (a == even) != (i % 2 == 0) {
            return Err(format!("document {i} landed with the wrong vocabulary group"));
        }
    }
    // independent reference at the same seed
    let vocab: Vec<&String> = {
        let mut v: Vec<&String> = docs.iter().flatten().collect();
        v.sort();
        v.dedup();
        v
    };
    let mut tokens = Vec::new();
    for (d, doc) in docs.iter().enumerate() {
        let mut counts = BTreeMap::new();
        for t in doc {
            *counts.entry(vocab.binary_search(&t).unwrap()).or_insert(0) += 1;
        }
        for (w, c) in counts {
            tokens.extend(std::iter::repeat_n((d, w), c));
        }
    }
    let reference = reference_gibbs(&tokens, (docs.len(), vocab.len(), 2), (0.1, 0.1), 500, seed);
    for (d, row) in reference.iter().enumerate() {
        for (t, &p) in row.iter().enumerate() {
            if (fit.doc_topic[[d, t]] - p).abs() > 1e-12 {
                return Err(format!("doc_topic[{d},{t}] differs from the reference sampler"));
            }
        }
    }
    Ok(format!(
        "{sweeps} sweeps conserved counts; K=1 degenerate; min dominant mass {min_mass:.3}; matches reference sampler"
    ))
}

fn gradient_check() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (n, p) = (rng.random_range(2..=20), rng.random_range(1..=6));
        let x = Array2::from_shape_simple_fn((n, p), || rng.random_range(-2.0..2.0));
        let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..=1)).collect();
        let w = Array1::from_shape_simple_fn(p, || rng.random_range(-1.5..1.5));
        let b = rng.random_range(-1.0..1.0);
        let l2 = rng.random_range(0.0..2.0);
        let (gw, gb) = logistic_gradient(&w, b, &x, &y, l2);
        let mut analytic = gw.to_vec();
        analytic.push(gb);
        let mut numeric = Vec::with_capacity(p + 1);
        for j in 0..p {
            let (mut up, mut down) = (w.clone(), w.clone());
            up[j] += h;
            down[j] -= h;
            numeric
                .push((logistic_loss(&up, b, &x, &y, l2) - logistic_loss(&down, b, &x, &y, l2)) / (2.0 * h));
        }
        numeric
            .push((logistic_loss(&w, b + h, &x, &y, l2) - logistic_loss(&w, b - h, &x, &y, l2)) / (2.0 * h));
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = analytic
            .iter()
            .map(|a| a * a)
            .sum::<f64>()
            .sqrt()
            .max(numeric.iter().map(|a| a * a).sum::<f64>().sqrt())
            .max(1e-8);
        worst = worst.max(diff / scale);
    }
    if worst < 1e-4 {
        Ok(format!("100 points, worst relative error {worst:.2e}"))
    } else {
        Err(format!("worst relative error {worst:.2e}"))
    }
}

fn f1_oracle(t: &[u8], p: &[u8]) -> f64 {
    let tp = t.iter().zip(p).filter(|&(&a, &b)| a == 1 && b == 1).count() as f64;
    let pred_pos = p.iter().filter(|&&b| b == 1).count() as f64;
    let true_pos = t.iter().filter(|&&a| a == 1).count() as f64;
    if tp == 0.0 {
        return 0.0;
    }
    let (precision, recall) = (tp / pred_pos, tp / true_pos);
    2.0 * precision * recall / (precision + recall)
}

/// (M1 − M0) / s · sqrt(p q), with s the population standard deviation.
fn point_biserial_oracle(y: &[u8], s: &[f64]) -> f64 {
    let n = y.len() as f64;
    let ones: Vec<f64> = y.iter().zip(s).filter(|p| *p.0 == 1).map(|p| *p.1).collect();
    let zeros: Vec<f64> = y.iter().zip(s).filter(|p| *p.0 == 0).map(|p| *p.1).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let m = mean(s);
    let sd = (s.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
    let (p, q) = (ones.len() as f64 / n, zeros.len() as f64 / n);
    (mean(&ones) - mean(&zeros)) / sd * (p * q).sqrt()
}

fn oracles() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..1000 {
        let n = rng.random_range(1..=40);
        let t: Vec<u8> = (0..n).map(|_| rng.random_range(0..=1)).collect();
        let p: Vec<u8> = (0..n).map(|_| rng.random_range(0..=1)).collect();
        let got = f1_score(&t, &p).unwrap();
        if (got - f1_oracle(&t, &p)).abs() > 1e-12 {
            return Err(format!("f1_score trial {trial}: {got} vs {}", f1_oracle(&t, &p)));
        }
    }
    for trial in 0..1000 {
        let (n, k) = (rng.random_range(1..=30), rng.random_range(1..=8));
        let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let m = one_hot_topics(&a, k).unwrap();
        for (i, &ai) in a.iter().enumerate() {
            for j in 0..k {
                let want = if ai == j { 1.0 } else { 0.0 };
                if m.values[[i, j]] != want {
                    return Err(format!("one_hot_topics trial {trial} cell ({i},{j})"));
                }
            }
        }
    }
    let mut pb = 0;
    while pb < 1000 {
        let n = rng.random_range(2..=50);
        let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..=1)).collect();
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        if y.iter().all(|&v| v == y[0]) {
            continue;
        }
        let got = point_biserial(&y, &s).unwrap();
        let want = point_biserial_oracle(&y, &s);
        if (got - want).abs() > 1e-12 {
            return Err(format!("point_biserial trial {pb}: {got} vs {want}"));
        }
        pb += 1;
    }
    for trial in 0..1000 {
        let c = rng.random_range(1..=4);
        let n = rng.random_range(c..=c + 8);
        let corpus = random_corpus(&mut rng, n, 6, 8);
        // every class gets at least one document
        let mut classes: Vec<usize> =
            (0..n).map(|i| if i < c { i } else { rng.random_range(0..c) }).collect();
        classes.shuffle(&mut rng);
        let dtm = build_doc_term_matrix(&corpus, Weighting::Count, 1).unwrap();
        let got = c_tf_idf(&dtm, &classes, c).unwrap();
        let mut tf: HashMap<(usize, &str), f64> = HashMap::new();
        let mut total: HashMap<&str, f64> = HashMap::new();
        let mut all = 0.0;
        for (doc, &cls) in corpus.documents.iter().zip(&classes) {
            for tok in &doc.tokens {
                *tf.entry((cls, tok.as_str())).or_default() += 1.0;
                *total.entry(tok.as_str()).or_default() += 1.0;
                all += 1.0;
            }
        }
        let avg = all / c as f64;
        for (j, term) in dtm.vocabulary().terms().iter().enumerate() {
            for cls in 0..c {
                let f = tf.get(&(cls, term.as_str())).copied().unwrap_or(0.0);
                let want = f * (1.0 + avg / total[term.as_str()]).ln();
                if (got[[cls, j]] - want).abs() > 1e-9 {
                    return Err(format!(
                        "c_tf_idf trial {trial} ({cls},{term}): {} vs {want}",
                        got[[cls, j]]
                    ));
                }
            }
        }
    }
    Ok("f1_score, one_hot_topics, point_biserial, c_tf_idf: 1000 instances each".into())
}

fn coherence_ordering() -> Result<String, String> {
    let cfg = SyntheticConfig { n_docs: 200, ..SyntheticConfig::weak_link() };
    let config = CoherenceConfig::default();
    let mut wins = 0;
    for seed in 0..100u64 {
        let (corpus, _) = stance_corpus(&cfg, seed);
        let theme = (seed as usize) % cfg.n_themes;
        let planted: Vec<String> = (0..10).map(|j| pseudo_word('t', theme * cfg.theme_vocab + j)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut vocab: Vec<String> = corpus.vocabulary.terms().to_vec();
        vocab.shuffle(&mut rng);
        let random = &vocab[..10];
        let score = |words: &[String]| {
            let refs: Vec<&str> = words.iter().map(String::as_str).collect();
            topic_coherence(&refs, &corpus, &config).unwrap()
        };
        if score(&planted) > score(random) {
            wins += 1;
        }
    }
    let exact_counts = npmi(7, 7, 7, 7, 1e-12) == 1.0 && npmi(3, 3, 3, 11, 1e-12) == 1.0;
    let pair = Corpus::from_tokens(
        (0..5).map(|i| vec!["x".to_string(), "y".to_string(), format!("z{i}")]).collect(),
    );
    let exact_corpus = topic_coherence(&["x", "y"], &pair, &config).unwrap() == 1.0;
    let detail = format!(
        "planted beats random in {wins}/100 seeds; perfect pair exact: {}",
        exact_counts && exact_corpus
    );
    if wins >= 95 && exact_counts && exact_corpus {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinism() -> Result<String, String> {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = common::full_pipeline(a.path(), "7");
    let second = common::full_pipeline(b.path(), "7");
    if first != second {
        return Err("reports differ between runs".into());
    }
    Ok(format!("prep → embed → fit → classify ×3 → sweep → report twice, {} identical bytes", first.len()))
}
