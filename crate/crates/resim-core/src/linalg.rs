//! Shared numerical primitives: centering, norms, k-NN, similarity matrices,
//! and failure-aware SVD / symmetric-eigen wrappers.

use crate::error::MeasureFailure;
use nalgebra::{DMatrix, DVector};

/// Relative cutoff under the largest singular value below which a direction is
/// treated as numerically rank-deficient.
pub const RANK_REL_TOL: f64 = 1e-10;

/// Subtract each column's mean from the column.
pub fn center_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    let n = m.nrows() as f64;
    for col in 0..m.ncols() {
        let mean = m.column(col).sum() / n;
        for row in 0..m.nrows() {
            out[(row, col)] -= mean;
        }
    }
    out
}

/// Rescale so the Frobenius norm equals `target`. Zero matrices are undefined input.
pub fn normalize_matrix(m: &DMatrix<f64>, target: f64) -> Result<DMatrix<f64>, MeasureFailure> {
    let norm = m.norm();
    if norm == 0.0 {
        return Err(MeasureFailure::undefined_input("cannot rescale a zero matrix"));
    }
    Ok(m * (target / norm))
}

/// True when every entry of the row is bitwise identical.
fn row_is_constant(m: &DMatrix<f64>, row: usize) -> bool {
    let first = m[(row, 0)];
    (1..m.ncols()).all(|c| m[(row, c)] == first)
}

/// Pearson correlation of two equal-length slices; `None` when either is constant.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let constant = |v: &[f64]| v.iter().all(|&x| x == v[0]);
    if constant(xs) || constant(ys) {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Cosine similarity; `None` when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    debug_assert_eq!(a.len(), b.len());
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some(dot / (na.sqrt() * nb.sqrt()))
}

/// Pairwise Euclidean distances between rows; symmetric with zero diagonal.
pub fn euclidean_rsm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut s = 0.0;
            for c in 0..m.ncols() {
                let d = m[(i, c)] - m[(j, c)];
                s += d * d;
            }
            let dist = s.sqrt();
            out[(i, j)] = dist;
            out[(j, i)] = dist;
        }
    }
    out
}

/// Pairwise Pearson correlations between rows; unit diagonal.
/// Fails on constant rows (correlation undefined) or single-column input.
pub fn pearson_row_rsm(m: &DMatrix<f64>) -> Result<DMatrix<f64>, MeasureFailure> {
    let n = m.nrows();
    if m.ncols() < 2 {
        return Err(MeasureFailure::undefined_input(
            "row correlations need at least 2 features",
        ));
    }
    for i in 0..n {
        if row_is_constant(m, i) {
            return Err(MeasureFailure::undefined_input(format!(
                "row {i} is constant; correlation undefined"
            )));
        }
    }
    // Center rows once, then correlate.
    let d = m.ncols() as f64;
    let mut centered = m.clone();
    let mut norms = vec![0.0; n];
    for i in 0..n {
        let mean = m.row(i).sum() / d;
        let mut s = 0.0;
        for c in 0..m.ncols() {
            let v = m[(i, c)] - mean;
            centered[(i, c)] = v;
            s += v * v;
        }
        if s == 0.0 {
            return Err(MeasureFailure::undefined_input(format!(
                "row {i} has zero variance; correlation undefined"
            )));
        }
        norms[i] = s.sqrt();
    }
    let mut out = DMatrix::identity(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let r = centered.row(i).dot(&centered.row(j)) / (norms[i] * norms[j]);
            out[(i, j)] = r;
            out[(j, i)] = r;
        }
    }
    Ok(out)
}

/// Indices of the `k` nearest rows by cosine similarity for every row,
/// ordered from rank 1 to rank `k`; similarity ties break to the lower index.
pub fn cosine_knn(m: &DMatrix<f64>, k: usize) -> Result<Vec<Vec<usize>>, MeasureFailure> {
    let n = m.nrows();
    if k == 0 {
        return Err(MeasureFailure::undefined_input("k must be at least 1"));
    }
    if n <= k {
        return Err(MeasureFailure::undefined_input(format!(
            "need more than k={k} rows, got {n}"
        )));
    }
    let mut norms = vec![0.0; n];
    for i in 0..n {
        let norm = m.row(i).norm();
        if norm == 0.0 {
            return Err(MeasureFailure::undefined_input(format!(
                "row {i} is all zeros; cosine undefined"
            )));
        }
        norms[i] = norm;
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut sims: Vec<(usize, f64)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (j, m.row(i).dot(&m.row(j)) / (norms[i] * norms[j])))
            .collect();
        sims.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        out.push(sims[..k].iter().map(|&(j, _)| j).collect());
    }
    Ok(out)
}

/// Double-center a square matrix: subtract row and column means, add the grand mean.
pub fn double_center(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| m.row(i).sum() / nf).collect();
    let col_means: Vec<f64> = (0..n).map(|j| m.column(j).sum() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    DMatrix::from_fn(n, n, |i, j| m[(i, j)] - row_means[i] - col_means[j] + grand)
}

/// Append zero columns until the matrix has `cols` columns.
pub fn pad_columns(m: &DMatrix<f64>, cols: usize) -> DMatrix<f64> {
    debug_assert!(cols >= m.ncols());
    let mut out = DMatrix::zeros(m.nrows(), cols);
    out.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
    out
}

/// Thin SVD with singular values sorted in descending order.
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

const SVD_MAX_ITER: usize = 10_000;

pub fn svd(m: &DMatrix<f64>) -> Result<Svd, MeasureFailure> {
    let decomp = nalgebra::linalg::SVD::try_new(m.clone(), true, true, f64::EPSILON, SVD_MAX_ITER)
        .ok_or_else(|| MeasureFailure::numerical("SVD did not converge"))?;
    let u = decomp.u.expect("u requested");
    let v_t = decomp.v_t.expect("v_t requested");
    let s = decomp.singular_values;
    // Re-sort defensively; downstream code relies on descending order.
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap().then(a.cmp(&b)));
    let u_sorted = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let vt_sorted = DMatrix::from_fn(order.len(), v_t.ncols(), |r, c| v_t[(order[r], c)]);
    let s_sorted = DVector::from_fn(order.len(), |r, _| s[order[r]]);
    if s_sorted.iter().any(|v| !v.is_finite()) {
        return Err(MeasureFailure::numerical("non-finite singular values"));
    }
    Ok(Svd { u: u_sorted, singular_values: s_sorted, v_t: vt_sorted })
}

pub fn singular_values(m: &DMatrix<f64>) -> Result<DVector<f64>, MeasureFailure> {
    let decomp =
        nalgebra::linalg::SVD::try_new(m.clone(), false, false, f64::EPSILON, SVD_MAX_ITER)
            .ok_or_else(|| MeasureFailure::numerical("SVD did not converge"))?;
    let mut vals: Vec<f64> = decomp.singular_values.iter().copied().collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(MeasureFailure::numerical("non-finite singular values"));
    }
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(DVector::from_vec(vals))
}

/// Sum of singular values.
pub fn nuclear_norm(m: &DMatrix<f64>) -> Result<f64, MeasureFailure> {
    Ok(singular_values(m)?.sum())
}

/// Orthonormal basis for the column space: left singular vectors whose
/// singular value exceeds `RANK_REL_TOL` times the largest.
/// Returns an `nrows x 0` matrix for numerically zero input.
pub fn orthonormal_columns(m: &DMatrix<f64>) -> Result<DMatrix<f64>, MeasureFailure> {
    let Svd { u, singular_values: s, .. } = svd(m)?;
    let rank = effective_rank(&s);
    Ok(u.columns(0, rank).into_owned())
}

/// Number of singular values above the relative tolerance (input sorted descending).
pub fn effective_rank(sorted_singular_values: &DVector<f64>) -> usize {
    if sorted_singular_values.len() == 0 {
        return 0;
    }
    let cutoff = RANK_REL_TOL * sorted_singular_values[0];
    if sorted_singular_values[0] == 0.0 {
        return 0;
    }
    sorted_singular_values.iter().take_while(|&&v| v > cutoff).count()
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>), MeasureFailure> {
    let decomp =
        nalgebra::linalg::SymmetricEigen::try_new(m.clone(), f64::EPSILON, SVD_MAX_ITER)
            .ok_or_else(|| MeasureFailure::numerical("eigen-decomposition did not converge"))?;
    let vals = decomp.eigenvalues;
    let vecs = decomp.eigenvectors;
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(MeasureFailure::numerical("non-finite eigenvalues"));
    }
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap().then(a.cmp(&b)));
    let sorted_vals = DVector::from_fn(order.len(), |r, _| vals[order[r]]);
    let sorted_vecs = DMatrix::from_fn(vecs.nrows(), order.len(), |r, c| vecs[(r, order[c])]);
    Ok((sorted_vals, sorted_vecs))
}
