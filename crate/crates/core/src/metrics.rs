//! Regression metrics and fold/seed aggregation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_pair(predictions: &[f64], labels: &[f64], min: usize) -> Result<()> {
    if predictions.len() != labels.len() {
        return Err(Error::Metric(format!(
            "length mismatch: {} predictions vs {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if labels.len() < min {
        return Err(Error::Metric(format!(
            "need at least {min} samples, got {}",
            labels.len()
        )));
    }
    Ok(())
}

pub fn rmse(predictions: &[f64], labels: &[f64]) -> Result<f64> {
    check_pair(predictions, labels, 1)?;
    let sse: f64 = predictions.iter().zip(labels).map(|(p, y)| (p - y) * (p - y)).sum();
    Ok((sse / labels.len() as f64).sqrt())
}

/// Fraction of label-ordered pairs (`y_i > y_j`) whose predictions are in
/// the same order, counting prediction ties as one half. Pairs with equal
/// labels are skipped.
pub fn concordance_index(predictions: &[f64], labels: &[f64]) -> Result<f64> {
    check_pair(predictions, labels, 2)?;
    let mut score = 0.0;
    let mut pairs = 0u64;
    for i in 0..labels.len() {
        for j in 0..labels.len() {
            if labels[i] > labels[j] {
                pairs += 1;
                if predictions[i] > predictions[j] {
                    score += 1.0;
                } else if predictions[i] == predictions[j] {
                    score += 0.5;
                }
            }
        }
    }
    if pairs == 0 {
        return Err(Error::Metric(
            "concordance index undefined: all labels identical".into(),
        ));
    }
    Ok(score / pairs as f64)
}

/// O(N log N) concordance index; returns exactly the same value as
/// [`concordance_index`].
pub fn concordance_index_fast(predictions: &[f64], labels: &[f64]) -> Result<f64> {
    check_pair(predictions, labels, 2)?;
    let n = labels.len();
    if predictions.iter().chain(labels).any(|x| x.is_nan()) {
        // NaN never compares greater or equal; fall back to the definition.
        return concordance_index(predictions, labels);
    }
    let mut sorted_preds: Vec<f64> = predictions.to_vec();
    sorted_preds.sort_by(f64::total_cmp);
    sorted_preds.dedup_by(|a, b| a == b);
    let rank = |p: f64| sorted_preds.partition_point(|&q| q < p);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| labels[a].total_cmp(&labels[b]));

    let mut tree = vec![0u64; sorted_preds.len() + 1];
    let add = |tree: &mut Vec<u64>, mut i: usize| {
        i += 1;
        while i < tree.len() {
            tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    };
    let prefix = |tree: &Vec<u64>, mut i: usize| -> u64 {
        // count of inserted ranks < i
        let mut s = 0;
        while i > 0 {
            s += tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    };

    let (mut concordant, mut ties, mut pairs, mut inserted) = (0u64, 0u64, 0u64, 0u64);
    let mut start = 0;
    while start < n {
        let mut end = start;
        while end < n && labels[order[end]] == labels[order[start]] {
            end += 1;
        }
        for &i in &order[start..end] {
            let r = rank(predictions[i]);
            let below = prefix(&tree, r);
            let through = prefix(&tree, r + 1);
            concordant += below;
            ties += through - below;
            pairs += inserted;
        }
        for &i in &order[start..end] {
            add(&mut tree, rank(predictions[i]));
            inserted += 1;
        }
        start = end;
    }
    if pairs == 0 {
        return Err(Error::Metric(
            "concordance index undefined: all labels identical".into(),
        ));
    }
    Ok((concordant as f64 + 0.5 * ties as f64) / pairs as f64)
}

/// Pearson correlation coefficient.
pub fn pearson_r(predictions: &[f64], labels: &[f64]) -> Result<f64> {
    check_pair(predictions, labels, 2)?;
    let n = labels.len() as f64;
    let mp = predictions.iter().sum::<f64>() / n;
    let my = labels.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (p, y) in predictions.iter().zip(labels) {
        let (dp, dy) = (p - mp, y - my);
        sxy += dp * dy;
        sxx += dp * dp;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Metric(
            "pearson correlation undefined for a constant vector".into(),
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Squared Pearson correlation.
pub fn pearson_r2(predictions: &[f64], labels: &[f64]) -> Result<f64> {
    pearson_r(predictions, labels).map(|r| r * r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricCell {
    pub fold: usize,
    pub seed: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub scheme: String,
    pub cells: Vec<MetricCell>,
    /// Mean over seeds for each fold, ordered by fold.
    pub per_fold: Vec<(usize, f64)>,
    /// Mean over folds for each seed, ordered by seed.
    pub per_seed: Vec<(u64, f64)>,
    pub mean: f64,
    /// Sample standard deviation over all cells; 0 for a single cell.
    pub std: f64,
}

/// Mean and sample standard deviation over every (fold, seed) cell.
pub fn aggregate(metric: &str, scheme: &str, cells: &[MetricCell]) -> MetricReport {
    let mut cells = cells.to_vec();
    cells.sort_by_key(|c| (c.seed, c.fold));
    let values: Vec<f64> = cells.iter().map(|c| c.value).collect();
    let (mean, std) = mean_std(&values);

    let mut folds: Vec<usize> = cells.iter().map(|c| c.fold).collect();
    folds.sort_unstable();
    folds.dedup();
    let mut seeds: Vec<u64> = cells.iter().map(|c| c.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    let group_mean = |pred: &dyn Fn(&MetricCell) -> bool| {
        let v: Vec<f64> = cells.iter().filter(|c| pred(c)).map(|c| c.value).collect();
        mean_std(&v).0
    };
    MetricReport {
        metric: metric.to_string(),
        scheme: scheme.to_string(),
        per_fold: folds.iter().map(|&f| (f, group_mean(&|c| c.fold == f))).collect(),
        per_seed: seeds.iter().map(|&s| (s, group_mean(&|c| c.seed == s))).collect(),
        cells,
        mean,
        std,
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
