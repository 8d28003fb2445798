//! Comparisons of local neighborhood structure under cosine k-NN.

use crate::error::MeasureFailure;
use crate::linalg::{cosine, cosine_knn};
use nalgebra::DMatrix;

/// Mean Jaccard overlap of the k nearest neighbor sets.
pub fn jaccard_knn(x: &DMatrix<f64>, y: &DMatrix<f64>, k: usize) -> Result<f64, MeasureFailure> {
    let (a, b) = (cosine_knn(x, k)?, cosine_knn(y, k)?);
    let total: f64 = a.iter().zip(&b).map(|(na, nb)| jaccard(na, nb)).sum();
    Ok(total / a.len() as f64)
}

fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    let inter = a.iter().filter(|i| b.contains(i)).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

/// Mean reciprocal-rank agreement: shared neighbors score 2/(rank_a + rank_b),
/// normalized by the best attainable sum_{r=1..k} 1/r.
pub fn rank_similarity(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    k: usize,
) -> Result<f64, MeasureFailure> {
    let (a, b) = (cosine_knn(x, k)?, cosine_knn(y, k)?);
    let norm: f64 = (1..=k).map(|r| 1.0 / r as f64).sum();
    let total: f64 = a.iter().zip(&b).map(|(na, nb)| rank_agreement(na, nb) / norm).sum();
    Ok(total / a.len() as f64)
}

fn rank_agreement(a: &[usize], b: &[usize]) -> f64 {
    let mut s = 0.0;
    for (pos_a, j) in a.iter().enumerate() {
        if let Some(pos_b) = b.iter().position(|m| m == j) {
            s += 2.0 / ((pos_a + 1 + pos_b + 1) as f64);
        }
    }
    s
}

/// Mean cosine between the two vectors of similarities from each instance to
/// the union of its neighborhoods (union ordered by ascending index).
/// Instances where either similarity vector is all-zero are skipped.
pub fn second_order_cosine(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    k: usize,
) -> Result<f64, MeasureFailure> {
    let (a, b) = (cosine_knn(x, k)?, cosine_knn(y, k)?);
    let n = x.nrows();
    let row = |m: &DMatrix<f64>, i: usize| -> Vec<f64> { m.row(i).iter().copied().collect() };
    let mut total = 0.0;
    let mut used = 0usize;
    for i in 0..n {
        let mut union: Vec<usize> = a[i].iter().chain(b[i].iter()).copied().collect();
        union.sort_unstable();
        union.dedup();
        let (xi, yi) = (row(x, i), row(y, i));
        let sx: Vec<f64> =
            union.iter().map(|&j| cosine(&xi, &row(x, j)).unwrap_or(0.0)).collect();
        let sy: Vec<f64> =
            union.iter().map(|&j| cosine(&yi, &row(y, j)).unwrap_or(0.0)).collect();
        if let Some(c) = cosine(&sx, &sy) {
            total += c;
            used += 1;
        }
    }
    if used == 0 {
        return Err(MeasureFailure::undefined_input(
            "every instance had a zero similarity profile",
        ));
    }
    Ok(total / used as f64)
}
