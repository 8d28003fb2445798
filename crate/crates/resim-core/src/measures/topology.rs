//! Heat-kernel traces of the k-NN graph Laplacian and the divergence built on
//! them. Small graphs use the exact spectrum; large graphs fall back to
//! stochastic Lanczos quadrature with Rademacher probes.

use crate::error::MeasureFailure;
use crate::linalg::{euclidean_rsm, symmetric_eigen};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct HeatTraceParams {
    /// Neighbors per vertex before symmetrization (clamped to N-1).
    pub graph_k: usize,
    /// Diffusion times; must be positive and shared between compared traces.
    pub t_grid: Vec<f64>,
    pub lanczos_steps: usize,
    pub probes: usize,
    pub repeats: usize,
    /// Largest N for which the exact spectrum is used instead of quadrature.
    pub exact_threshold: usize,
}

impl Default for HeatTraceParams {
    fn default() -> Self {
        Self {
            graph_k: 5,
            t_grid: log_grid(1e-2, 1e2, 256),
            lanczos_steps: 10,
            probes: 800,
            repeats: 5,
            exact_threshold: 512,
        }
    }
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (a, b) = (lo.log10(), hi.log10());
    (0..count).map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEstimator {
    ExactSpectrum,
    StochasticLanczos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatTraceDescriptor {
    pub t_grid: Vec<f64>,
    pub traces: Vec<f64>,
    pub estimator: TraceEstimator,
}

/// Undirected unweighted k-NN graph: j is adjacent to i when either is among
/// the other's k nearest rows by Euclidean distance (ties to the lower index).
fn knn_graph(m: &DMatrix<f64>, k: usize) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let k = k.min(n - 1);
    let dist = euclidean_rsm(m);
    let mut adj: Vec<std::collections::BTreeSet<usize>> = vec![Default::default(); n];
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| dist[(i, a)].partial_cmp(&dist[(i, b)]).unwrap().then(a.cmp(&b)));
        for &j in &order[..k] {
            adj[i].insert(j);
            adj[j].insert(i);
        }
    }
    adj.into_iter().map(|s| s.into_iter().collect()).collect()
}

/// Symmetric normalized Laplacian as adjacency lists + degree scaling.
struct Laplacian {
    adj: Vec<Vec<usize>>,
    inv_sqrt_deg: Vec<f64>,
}

impl Laplacian {
    fn new(adj: Vec<Vec<usize>>) -> Self {
        // Isolated vertices keep eigenvalue 0 (their heat term stays e^0).
        let inv_sqrt_deg =
            adj.iter().map(|a| if a.is_empty() { 0.0 } else { 1.0 / (a.len() as f64).sqrt() }).collect();
        Self { adj, inv_sqrt_deg }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for i in 0..v.len() {
            if self.adj[i].is_empty() {
                continue;
            }
            let mut acc = 0.0;
            for &j in &self.adj[i] {
                acc += v[j] * self.inv_sqrt_deg[j];
            }
            out[i] = v[i] - self.inv_sqrt_deg[i] * acc;
        }
        out
    }

    fn dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut l = DMatrix::zeros(n, n);
        for i in 0..n {
            if self.adj[i].is_empty() {
                continue;
            }
            l[(i, i)] = 1.0;
            for &j in &self.adj[i] {
                l[(i, j)] = -self.inv_sqrt_deg[i] * self.inv_sqrt_deg[j];
            }
        }
        l
    }
}

fn validate(params: &HeatTraceParams) -> Result<(), MeasureFailure> {
    if params.graph_k == 0 || params.lanczos_steps == 0 || params.probes == 0 || params.repeats == 0
    {
        return Err(MeasureFailure::undefined_input("heat-trace parameters must be positive"));
    }
    if params.t_grid.is_empty() || params.t_grid.iter().any(|&t| t <= 0.0 || !t.is_finite()) {
        return Err(MeasureFailure::undefined_input("t grid must be positive and finite"));
    }
    Ok(())
}

/// Heat traces tr(exp(-t L)) over the grid, choosing the estimator by size.
pub fn heat_trace(
    m: &DMatrix<f64>,
    params: &HeatTraceParams,
    seed: u64,
) -> Result<HeatTraceDescriptor, MeasureFailure> {
    let estimator = if m.nrows() <= params.exact_threshold {
        TraceEstimator::ExactSpectrum
    } else {
        TraceEstimator::StochasticLanczos
    };
    heat_trace_with(m, params, seed, estimator)
}

/// Heat traces with a forced estimator.
pub fn heat_trace_with(
    m: &DMatrix<f64>,
    params: &HeatTraceParams,
    seed: u64,
    estimator: TraceEstimator,
) -> Result<HeatTraceDescriptor, MeasureFailure> {
    validate(params)?;
    let lap = Laplacian::new(knn_graph(m, params.graph_k));
    let traces = match estimator {
        TraceEstimator::ExactSpectrum => exact_traces(&lap, &params.t_grid)?,
        TraceEstimator::StochasticLanczos => slq_traces(&lap, params, seed)?,
    };
    Ok(HeatTraceDescriptor { t_grid: params.t_grid.clone(), traces, estimator })
}

fn exact_traces(lap: &Laplacian, t_grid: &[f64]) -> Result<Vec<f64>, MeasureFailure> {
    let (eigenvalues, _) = symmetric_eigen(&lap.dense())?;
    Ok(t_grid
        .iter()
        .map(|&t| eigenvalues.iter().map(|&l| (-t * l).exp()).sum())
        .collect())
}

fn slq_traces(
    lap: &Laplacian,
    params: &HeatTraceParams,
    seed: u64,
) -> Result<Vec<f64>, MeasureFailure> {
    let n = lap.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut repeat_means = vec![0.0; params.t_grid.len()];
    for _ in 0..params.repeats {
        let mut probe_sum = vec![0.0; params.t_grid.len()];
        for _ in 0..params.probes {
            let z: Vec<f64> =
                (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
            let scale = 1.0 / (n as f64).sqrt();
            let v0: Vec<f64> = z.iter().map(|x| x * scale).collect();
            let (alphas, betas) = lanczos(lap, v0, params.lanczos_steps);
            let quad = quadrature(&alphas, &betas)?;
            for (acc, &t) in probe_sum.iter_mut().zip(&params.t_grid) {
                // ||z||^2 = n for Rademacher probes.
                let est: f64 =
                    quad.iter().map(|&(theta, tau2)| tau2 * (-t * theta).exp()).sum::<f64>();
                *acc += n as f64 * est;
            }
        }
        for (mean, s) in repeat_means.iter_mut().zip(&probe_sum) {
            *mean += s / params.probes as f64;
        }
    }
    Ok(repeat_means.into_iter().map(|s| s / params.repeats as f64).collect())
}

/// Lanczos tridiagonalization with full reorthogonalization.
/// Returns the diagonal and off-diagonal of T; stops early on breakdown.
fn lanczos(lap: &Laplacian, v0: Vec<f64>, steps: usize) -> (Vec<f64>, Vec<f64>) {
    let steps = steps.min(lap.len());
    let mut basis: Vec<Vec<f64>> = vec![v0];
    let mut alphas = Vec::with_capacity(steps);
    let mut betas = Vec::new();
    for j in 0..steps {
        let v = basis[j].clone();
        let mut w = lap.apply(&v);
        let alpha: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        alphas.push(alpha);
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi -= alpha * vi;
        }
        if j > 0 {
            let beta_prev = betas[j - 1];
            for (wi, ui) in w.iter_mut().zip(&basis[j - 1]) {
                *wi -= beta_prev * ui;
            }
        }
        // Full reorthogonalization keeps the small-m quadrature stable.
        for q in &basis {
            let proj: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= proj * qi;
            }
        }
        if j + 1 == steps {
            break;
        }
        let beta: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if beta < 1e-12 {
            break;
        }
        betas.push(beta);
        basis.push(w.into_iter().map(|x| x / beta).collect());
    }
    (alphas, betas)
}

/// Gauss quadrature nodes and first-component weights of the tridiagonal T.
fn quadrature(alphas: &[f64], betas: &[f64]) -> Result<Vec<(f64, f64)>, MeasureFailure> {
    let m = alphas.len();
    let mut t = DMatrix::zeros(m, m);
    for (i, &a) in alphas.iter().enumerate() {
        t[(i, i)] = a;
    }
    for (i, &b) in betas.iter().enumerate() {
        t[(i, i + 1)] = b;
        t[(i + 1, i)] = b;
    }
    let (theta, vecs) = symmetric_eigen(&t)?;
    Ok((0..m).map(|k| (theta[k], vecs[(0, k)] * vecs[(0, k)])).collect())
}

/// Supremum over the grid of the weighted heat-trace gap:
/// sup_t exp(-2(t + 1/t)) * |h_x(t) - h_y(t)|. Row counts may differ.
pub fn imd(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    params: &HeatTraceParams,
    seed: u64,
) -> Result<f64, MeasureFailure> {
    let hx = heat_trace(x, params, seed)?;
    let hy = heat_trace(y, params, seed)?;
    Ok(weighted_sup(&hx, &hy))
}

/// The IMD aggregation on two precomputed descriptors sharing a grid.
pub fn weighted_sup(hx: &HeatTraceDescriptor, hy: &HeatTraceDescriptor) -> f64 {
    debug_assert_eq!(hx.t_grid, hy.t_grid);
    hx.t_grid
        .iter()
        .zip(hx.traces.iter().zip(&hy.traces))
        .map(|(&t, (&a, &b))| (-2.0 * (t + 1.0 / t)).exp() * (a - b).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand_distr::{Distribution, StandardNormal};

    fn triangle() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.5, 1.0])
    }

    fn gaussian(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, d, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn complete_graph_spectrum_reference() {
        // K3 normalized Laplacian eigenvalues {0, 1.5, 1.5}: h(t) = 1 + 2 exp(-1.5 t).
        let params = HeatTraceParams { t_grid: vec![0.5, 1.0, 2.0], ..Default::default() };
        let h = heat_trace(&triangle(), &params, 0).unwrap();
        assert_eq!(h.estimator, TraceEstimator::ExactSpectrum);
        for (t, v) in params.t_grid.iter().zip(&h.traces) {
            assert_relative_eq!(*v, 1.0 + 2.0 * (-1.5 * t).exp(), epsilon = 1e-10);
        }
    }

    #[test]
    fn quadrature_tracks_exact_spectrum() {
        let m = triangle();
        let params = HeatTraceParams { t_grid: log_grid(1e-2, 1e2, 32), ..Default::default() };
        let exact = heat_trace_with(&m, &params, 7, TraceEstimator::ExactSpectrum).unwrap();
        let slq = heat_trace_with(&m, &params, 7, TraceEstimator::StochasticLanczos).unwrap();
        for (a, b) in exact.traces.iter().zip(&slq.traces) {
            assert!((a - b).abs() / a <= 0.08, "exact {a} vs quadrature {b}");
        }
    }

    #[test]
    fn traces_start_near_n_and_decrease() {
        let m = gaussian(30, 4, 3);
        let params = HeatTraceParams::default();
        let h = heat_trace(&m, &params, 0).unwrap();
        assert!(h.traces[0] > 29.0 && h.traces[0] <= 30.0);
        for w in h.traces.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn divergence_self_is_exactly_zero_and_symmetric() {
        let m = gaussian(25, 3, 11);
        let other = gaussian(40, 3, 12); // row counts may differ
        let params = HeatTraceParams::default();
        assert_eq!(imd(&m, &m, &params, 5).unwrap(), 0.0);
        let ab = imd(&m, &other, &params, 5).unwrap();
        let ba = imd(&other, &m, &params, 5).unwrap();
        assert_eq!(ab, ba);
        assert!(ab > 0.0);
    }

    #[test]
    fn divergence_invariant_under_shared_row_permutation() {
        let a = gaussian(24, 4, 21);
        let b = gaussian(24, 4, 22);
        let perm: Vec<usize> = {
            // Deterministic shuffle.
            let mut idx: Vec<usize> = (0..24).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            for i in (1..idx.len()).rev() {
                let j = rng.random_range(0..=i);
                idx.swap(i, j);
            }
            idx
        };
        let permute =
            |m: &DMatrix<f64>| DMatrix::from_fn(24, 4, |i, j| m[(perm[i], j)]);
        let params = HeatTraceParams::default();
        let base = imd(&a, &b, &params, 3).unwrap();
        let permuted = imd(&permute(&a), &permute(&b), &params, 3).unwrap();
        assert_relative_eq!(base, permuted, epsilon = 1e-10);
    }

    #[test]
    fn rejects_bad_params() {
        let m = triangle();
        let mut p = HeatTraceParams::default();
        p.t_grid = vec![0.0, 1.0];
        assert!(heat_trace(&m, &p, 0).is_err());
        let mut p2 = HeatTraceParams::default();
        p2.probes = 0;
        assert!(heat_trace_with(&m, &p2, 0, TraceEstimator::StochasticLanczos).is_err());
    }
}
