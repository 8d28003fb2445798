//! Scoring utilities: output-level differences, rank correlation, average
//! precision, and the conformity censuses used by the grounded tests.

use crate::error::MeasureFailure;
use crate::repr::ModelOutputs;
use std::collections::BTreeMap;

/// Fraction of instances whose argmax prediction equals the label.
pub fn accuracy(out: &ModelOutputs) -> f64 {
    let preds = out.predictions();
    let hits = preds.iter().zip(out.labels()).filter(|(p, l)| p == l).count();
    hits as f64 / out.n() as f64
}

pub fn accuracy_diff(a: &ModelOutputs, b: &ModelOutputs) -> f64 {
    (accuracy(a) - accuracy(b)).abs()
}

/// Fraction of instances where the two models predict different classes.
pub fn disagreement(a: &ModelOutputs, b: &ModelOutputs) -> Result<f64, MeasureFailure> {
    if a.n() != b.n() {
        return Err(MeasureFailure::dimension_mismatch(format!(
            "instance counts differ: {} vs {}",
            a.n(),
            b.n()
        )));
    }
    let (pa, pb) = (a.predictions(), b.predictions());
    let diff = pa.iter().zip(&pb).filter(|(x, y)| x != y).count();
    Ok(diff as f64 / a.n() as f64)
}

/// Mean Jensen-Shannon divergence over instances, halved: (1/2N) * sum_i JSD_2(p_i, q_i).
/// Base-2 logs, 0*log(0) = 0; ranges over [0, 0.5].
pub fn jsd_mean(a: &ModelOutputs, b: &ModelOutputs) -> Result<f64, MeasureFailure> {
    if a.n() != b.n() || a.classes() != b.classes() {
        return Err(MeasureFailure::dimension_mismatch(format!(
            "output shapes differ: {}x{} vs {}x{}",
            a.n(),
            a.classes(),
            b.n(),
            b.classes()
        )));
    }
    let kl_to_mid = |p: f64, m: f64| if p == 0.0 { 0.0 } else { p * (p / m).log2() };
    let mut total = 0.0;
    for i in 0..a.n() {
        let mut jsd = 0.0;
        for c in 0..a.classes() {
            let (p, q) = (a.probs()[(i, c)], b.probs()[(i, c)]);
            let m = 0.5 * (p + q);
            jsd += 0.5 * kl_to_mid(p, m) + 0.5 * kl_to_mid(q, m);
        }
        total += jsd;
    }
    Ok(total / (2.0 * a.n() as f64))
}

/// 1-based ranks with ties assigned the average of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end share the average rank
        let avg = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, MeasureFailure> {
    if x.len() != y.len() {
        return Err(MeasureFailure::dimension_mismatch(format!(
            "lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(MeasureFailure::undefined_input("need at least 3 observations"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(MeasureFailure::numerical("non-finite observations"));
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    crate::linalg::pearson(&rx, &ry)
        .ok_or_else(|| MeasureFailure::undefined_input("constant input; ranks have no variance"))
}

/// Area under the precision-recall curve as average precision, where tied
/// scores enter as a single threshold step.
pub fn auprc(scores: &[f64], labels: &[bool]) -> Result<f64, MeasureFailure> {
    if scores.len() != labels.len() {
        return Err(MeasureFailure::dimension_mismatch(format!(
            "lengths differ: {} vs {}",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(MeasureFailure::numerical("non-finite scores"));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return Err(MeasureFailure::undefined_input("no positive labels"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));

    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] {
                tp += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        let recall = tp as f64 / positives as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    Ok(ap)
}

/// Group-test outcome: separability plus the ordered-triple census.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupOutcome {
    pub conformity: f64,
    pub auprc: f64,
    pub pairs: usize,
    pub failed_pairs: usize,
}

/// Scores are oriented similarities (higher = more similar) for unordered model
/// pairs keyed `(lo, hi)`; pairs whose measure failed are simply absent and are
/// excluded from both statistics (and counted).
pub fn conformity_groups(
    scores: &BTreeMap<(usize, usize), f64>,
    groups: &[usize],
) -> Result<GroupOutcome, MeasureFailure> {
    let n = groups.len();
    let expected = n * (n - 1) / 2;
    let failed_pairs = expected.saturating_sub(scores.len());
    let get = |a: usize, b: usize| scores.get(&(a.min(b), a.max(b))).copied();

    // Ordered triples: anchor, same-group partner, different-group partner.
    let mut census = 0usize;
    let mut conforming = 0usize;
    for anchor in 0..n {
        for same in 0..n {
            if same == anchor || groups[same] != groups[anchor] {
                continue;
            }
            for diff in 0..n {
                if groups[diff] == groups[anchor] {
                    continue;
                }
                if let (Some(s_same), Some(s_diff)) = (get(anchor, same), get(anchor, diff)) {
                    census += 1;
                    if s_diff <= s_same {
                        conforming += 1;
                    }
                }
            }
        }
    }
    if census == 0 {
        return Err(MeasureFailure::undefined_input(
            "no scorable (anchor, same-group, cross-group) triples",
        ));
    }

    let mut pair_scores = Vec::with_capacity(scores.len());
    let mut pair_labels = Vec::with_capacity(scores.len());
    for (&(i, j), &s) in scores {
        if i < n && j < n {
            pair_scores.push(s);
            pair_labels.push(groups[i] == groups[j]);
        }
    }
    let auprc = auprc(&pair_scores, &pair_labels)?;
    Ok(GroupOutcome {
        conformity: conforming as f64 / census as f64,
        auprc,
        pairs: expected,
        failed_pairs,
    })
}

/// Layer-test outcome: nestedness census plus monotone-decay rank correlation.
/// The correlation is `None` when undefined (e.g. all pair scores tie).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerOutcome {
    pub conformity: f64,
    pub spearman: Option<f64>,
}

/// Scores are oriented similarities for all layer pairs `(i, j)` with `i < j`
/// (0-based). Checks every nested pair of intervals: for 1-based
/// i <= j < k <= l with (i,l) != (j,k), the wider interval must not be more
/// similar: s(i,l) <= s(j,k). Also correlates oriented distance (-s) against
/// layer distance, so +1 means similarity decays monotonically.
pub fn conformity_layers(
    scores: &BTreeMap<(usize, usize), f64>,
    n_layers: usize,
) -> Result<LayerOutcome, MeasureFailure> {
    if n_layers < 3 {
        return Err(MeasureFailure::undefined_input("need at least 3 layers"));
    }
    for i in 0..n_layers {
        for j in (i + 1)..n_layers {
            if !scores.contains_key(&(i, j)) {
                return Err(MeasureFailure::undefined_input(format!(
                    "missing score for layer pair ({i}, {j})"
                )));
            }
        }
    }
    let s = |a: usize, b: usize| scores[&(a - 1, b - 1)]; // 1-based accessor

    let mut census = 0usize;
    let mut conforming = 0usize;
    for i in 1..=n_layers {
        for j in i..=n_layers {
            for k in (j + 1)..=n_layers {
                for l in k..=n_layers {
                    if (i, l) == (j, k) {
                        continue;
                    }
                    census += 1;
                    if s(i, l) <= s(j, k) {
                        conforming += 1;
                    }
                }
            }
        }
    }

    let mut dist = Vec::new();
    let mut gap = Vec::new();
    for (&(i, j), &v) in scores {
        if j < n_layers {
            dist.push(-v);
            gap.push((j - i) as f64);
        }
    }
    let rho = spearman(&dist, &gap).ok();
    Ok(LayerOutcome { conformity: conforming as f64 / census as f64, spearman: rho })
}
