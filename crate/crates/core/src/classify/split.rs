use rand::seq::SliceRandom;

use crate::error::{ensure, Result};
use crate::seed;

/// Seeded train/test split with `round(ratio · n)` training rows. With labels,
/// every class contributes within one sample of `ratio` of its members.
pub fn train_test_split(
    n: usize,
    ratio: f64,
    stratify: Option<&[u8]>,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    ensure!(ratio > 0.0 && ratio < 1.0, Precondition, "split ratio {ratio} must be in (0, 1)");
    ensure!(n >= 2, Precondition, "need at least 2 samples to split (got {n})");
    let mut rng = seed::rng(seed);
    let n_train = (ratio * n as f64).round() as usize;
    let (mut train, mut test) = match stratify {
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            let test = idx.split_off(n_train);
            (idx, test)
        }
        Some(labels) => {
            ensure!(labels.len() == n, DimensionMismatch, "{} labels for {n} samples", labels.len());
            let classes = class_members(labels);
            for (c, members) in classes.iter().enumerate() {
                ensure!(
                    members.is_empty() || members.len() >= 2,
                    InvalidInput,
                    "class {c} has fewer than 2 members; cannot stratify"
                );
            }
            let quotas = allocate(&classes, ratio, n_train);
            let mut train = Vec::new();
            let mut test = Vec::new();
            for (mut members, quota) in classes.into_iter().zip(quotas) {
                members.shuffle(&mut rng);
                test.extend(members.split_off(quota));
                train.extend(members);
            }
            (train, test)
        }
    };
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Member indices for labels 0 and 1.
pub(crate) fn class_members(labels: &[u8]) -> Vec<Vec<usize>> {
    let mut classes = vec![Vec::new(), Vec::new()];
    for (i, &y) in labels.iter().enumerate() {
        classes[y as usize].push(i);
    }
    classes
}

/// Per-class training quotas summing to `total`: floors first, the rest to the
/// largest fractional parts (lower class first on ties).
fn allocate(classes: &[Vec<usize>], ratio: f64, total: usize) -> Vec<usize> {
    let exact: Vec<f64> = classes.iter().map(|m| ratio * m.len() as f64).collect();
    let mut quotas: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..classes.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    let mut remaining = total.saturating_sub(quotas.iter().sum());
    for c in order.into_iter().cycle().take(2 * classes.len()) {
        if remaining == 0 {
            break;
        }
        if quotas[c] < classes[c].len() {
            quotas[c] += 1;
            remaining -= 1;
        }
    }
    quotas
}

/// Validation index sets for k-fold CV. Stratified: classes are shuffled,
/// laid end to end and dealt round-robin, so fold sizes and per-class counts
/// each differ by at most one. Falls back to an unstratified deal (with a
/// warning) when a class has fewer members than folds.
pub fn kfold_indices(labels: &[u8], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = labels.len();
    ensure!(folds >= 2, Precondition, "need at least 2 folds (got {folds})");
    ensure!(n >= folds, Precondition, "{n} samples cannot fill {folds} folds");
    let mut rng = seed::rng(seed);
    let classes = class_members(labels);
    let stratify = classes.iter().all(|m| m.is_empty() || m.len() >= folds);
    let order: Vec<usize> = if stratify {
        classes
            .into_iter()
            .flat_map(|mut m| {
                m.shuffle(&mut rng);
                m
            })
            .collect()
    } else {
        log::warn!("a class has fewer than {folds} members; using unstratified folds");
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        idx
    };
    let mut out = vec![Vec::new(); folds];
    for (pos, i) in order.into_iter().enumerate() {
        out[pos % folds].push(i);
    }
    out.iter_mut().for_each(|f| f.sort_unstable());
    Ok(out)
}
