//! Release acceptance gate. Each test pins one guaranteed behavior of the
//! toolkit — invariances, oracle equivalence of the evaluation statistics,
//! closed-form synthetic anchors, end-to-end harness outcomes, determinism,
//! and failure plumbing — with the tolerances that define the contract.
//!
//! Every test prints `ACCEPTANCE <n> <label>: PASS` on success (visible with
//! `--nocapture`); a failed criterion panics with the offending values.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use resim_core::eval::{conformity_groups, conformity_layers, disagreement, jsd_mean, spearman};
use resim_core::harness::{self, BenchmarkReport, RunConfig, RunSection, TestKind, TestSection};
use resim_core::io::{write_labels_csv, write_npy};
use resim_core::measures::topology::{heat_trace_with, HeatTraceParams, TraceEstimator};
use resim_core::measures::Orientation;
use resim_core::nalgebra::DMatrix;
use resim_core::synth::{gen_grouped, gen_outputs, gen_rotation_chain, BetweenMap};
use resim_core::{EvalContext, MeasureDescriptor, ModelOutputs, Registry};
use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;
use tempfile::TempDir;

fn randn(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| StandardNormal.sample(rng))
}

fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    randn(rng, d, d).qr().q()
}

fn random_row_permutation(rng: &mut ChaCha8Rng, m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    DMatrix::from_fn(n, m.ncols(), |i, c| m[(perm[i], c)])
}

fn eval(m: &MeasureDescriptor, x: &DMatrix<f64>, y: &DMatrix<f64>, ctx: &EvalContext) -> f64 {
    m.evaluate(x, y, ctx).unwrap_or_else(|e| panic!("{} failed: {e}", m.id))
}

/// Oriented similarity: flips distances so higher always means more similar.
fn oriented(m: &MeasureDescriptor, v: f64) -> f64 {
    match m.orientation {
        Orientation::Similarity => v,
        Orientation::Distance => -v,
    }
}

#[test]
fn criterion_1_invariance_suite() {
    let start = Instant::now();
    let registry = Registry::standard();
    let ctx = EvalContext::with_seed(7);
    let cka = registry.get("cka").unwrap();
    let orthproc = registry.get("orthproc").unwrap();
    let angshape = registry.get("angshape").unwrap();
    let rsmdiff = registry.get("rsmdiff").unwrap();
    let distcorr = registry.get("distcorr").unwrap();

    for s in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + s);
        let r = randn(&mut rng, 100, 20);
        let q = random_orthogonal(&mut rng, 20);
        let rq = &r * &q;

        for c in [0.5, 3.0] {
            let crq = &rq * c;
            let v = eval(cka, &r, &crq, &ctx);
            assert!((v - 1.0).abs() <= 1e-6, "seed {s}: cka(R, {c}RQ) = {v}");
            let v = eval(orthproc, &r, &crq, &ctx);
            assert!(v.abs() <= 1e-6, "seed {s}: orthproc(R, {c}RQ) = {v}");
        }
        let v = eval(angshape, &r, &rq, &ctx);
        assert!(v.abs() <= 1e-6, "seed {s}: angshape(R, RQ) = {v}");
        let v = eval(rsmdiff, &r, &rq, &ctx);
        assert!(v.abs() <= 1e-8, "seed {s}: rsmdiff(R, RQ) = {v}");

        let shift: Vec<f64> = (0..20).map(|_| StandardNormal.sample(&mut rng)).collect();
        let affine = DMatrix::from_fn(100, 20, |i, c| 2.0 * r[(i, c)] + shift[c]);
        let v = eval(distcorr, &r, &affine, &ctx);
        assert!((v - 1.0).abs() <= 1e-8, "seed {s}: distcorr(R, 2R+shift) = {v}");

        // Shared row permutation leaves every measure unchanged.
        let r2 = randn(&mut rng, 100, 20);
        let mut perm_rng = ChaCha8Rng::seed_from_u64(5000 + s);
        let pr = random_row_permutation(&mut perm_rng, &r);
        let mut perm_rng = ChaCha8Rng::seed_from_u64(5000 + s);
        let pr2 = random_row_permutation(&mut perm_rng, &r2);
        for m in registry.measures() {
            let plain = eval(m, &r, &r2, &ctx);
            let permuted = eval(m, &pr, &pr2, &ctx);
            assert!(
                (plain - permuted).abs() <= 1e-8,
                "seed {s}: {} not permutation invariant: {plain} vs {permuted}",
                m.id
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 120, "took {elapsed:?}");
    println!("ACCEPTANCE 1 invariance suite: PASS ({elapsed:?})");
}

// ---------------------------------------------------------------------------
// Brute-force oracles, written independently of the library implementations.
// ---------------------------------------------------------------------------

fn oracle_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let smaller = v.iter().filter(|&&b| b < a).count();
            let equal = v.iter().filter(|&&b| b == a).count();
            1.0 + smaller as f64 + (equal as f64 - 1.0) / 2.0
        })
        .collect()
}

fn oracle_pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

fn oracle_spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    oracle_pearson(&oracle_ranks(x), &oracle_ranks(y))
}

/// Average precision by re-scanning the whole sample at every distinct
/// threshold, descending.
fn oracle_auprc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let positives = labels.iter().filter(|&&b| b).count();
    if positives == 0 {
        return None;
    }
    let mut thresholds = scores.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let (mut ap, mut prev_recall) = (0.0, 0.0);
    for &tau in &thresholds {
        let tp = scores.iter().zip(labels).filter(|&(s, &l)| *s >= tau && l).count();
        let predicted = scores.iter().filter(|&&s| s >= tau).count();
        let recall = tp as f64 / positives as f64;
        ap += (recall - prev_recall) * (tp as f64 / predicted as f64);
        prev_recall = recall;
    }
    Some(ap)
}

/// (conformity, auprc) over every (anchor, same-group, cross-group) triple and
/// every unordered pair, from scratch.
fn oracle_group(
    scores: &BTreeMap<(usize, usize), f64>,
    groups: &[usize],
) -> Option<(f64, f64)> {
    let n = groups.len();
    let s = |a: usize, b: usize| scores[&(a.min(b), a.max(b))];
    let (mut census, mut ok) = (0u64, 0u64);
    for anchor in 0..n {
        for same in 0..n {
            if same == anchor || groups[same] != groups[anchor] {
                continue;
            }
            for diff in 0..n {
                if groups[diff] == groups[anchor] {
                    continue;
                }
                census += 1;
                if s(anchor, diff) <= s(anchor, same) {
                    ok += 1;
                }
            }
        }
    }
    if census == 0 {
        return None;
    }
    let mut pair_scores = Vec::new();
    let mut pair_labels = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            pair_scores.push(s(i, j));
            pair_labels.push(groups[i] == groups[j]);
        }
    }
    Some((ok as f64 / census as f64, oracle_auprc(&pair_scores, &pair_labels)?))
}

/// (conformity, spearman) over every 1-based tuple i <= j < k <= l and all
/// (pair score, layer gap) samples, from scratch.
fn oracle_layers(
    scores: &BTreeMap<(usize, usize), f64>,
    layers: usize,
) -> (f64, Option<f64>) {
    let s = |a: usize, b: usize| scores[&(a - 1, b - 1)];
    let (mut census, mut ok) = (0u64, 0u64);
    for i in 1..=layers {
        for j in i..=layers {
            for k in (j + 1)..=layers {
                for l in k..=layers {
                    if (i, l) == (j, k) {
                        continue;
                    }
                    census += 1;
                    if s(i, l) <= s(j, k) {
                        ok += 1;
                    }
                }
            }
        }
    }
    let mut dist = Vec::new();
    let mut gap = Vec::new();
    for (&(i, j), &v) in scores {
        dist.push(-v);
        gap.push((j - i) as f64);
    }
    (ok as f64 / census as f64, oracle_spearman(&dist, &gap))
}

/// Distance correlation by explicit double-centering loops.
fn oracle_distcorr(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Option<f64> {
    let n = x.nrows();
    let dists = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut sq = 0.0;
                        for c in 0..m.ncols() {
                            let d = m[(i, c)] - m[(j, c)];
                            sq += d * d;
                        }
                        sq.sqrt()
                    })
                    .collect()
            })
            .collect()
    };
    let center = |d: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let nf = n as f64;
        let row_mean: Vec<f64> = d.iter().map(|r| r.iter().sum::<f64>() / nf).collect();
        let col_mean: Vec<f64> =
            (0..n).map(|j| d.iter().map(|r| r[j]).sum::<f64>() / nf).collect();
        let grand = d.iter().flatten().sum::<f64>() / (nf * nf);
        (0..n)
            .map(|i| (0..n).map(|j| d[i][j] - row_mean[i] - col_mean[j] + grand).collect())
            .collect()
    };
    let a = center(&dists(x));
    let b = center(&dists(y));
    let mean_prod = |p: &[Vec<f64>], q: &[Vec<f64>]| -> f64 {
        let mut t = 0.0;
        for i in 0..n {
            for j in 0..n {
                t += p[i][j] * q[i][j];
            }
        }
        t / (n * n) as f64
    };
    let dcov2 = mean_prod(&a, &b);
    let (vx, vy) = (mean_prod(&a, &a), mean_prod(&b, &b));
    if vx <= 0.0 || vy <= 0.0 {
        return None;
    }
    Some((dcov2.max(0.0) / (vx * vy).sqrt()).sqrt())
}

/// Ridgeless unified linear-probing distance via plain matrix inverses.
fn oracle_gulp0(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Option<f64> {
    let prep = |m: &DMatrix<f64>| -> Option<DMatrix<f64>> {
        let n = m.nrows();
        let mut c = m.clone();
        for col in 0..m.ncols() {
            let mean = m.column(col).sum() / n as f64;
            for row in 0..n {
                c[(row, col)] -= mean;
            }
        }
        let f = c.norm();
        if f == 0.0 {
            return None;
        }
        Some(c * ((n as f64).sqrt() / f))
    };
    let (xp, yp) = (prep(x)?, prep(y)?);
    let n = x.nrows() as f64;
    let sx = xp.transpose() * &xp / n;
    let sy = yp.transpose() * &yp / n;
    let sxy = xp.transpose() * &yp / n;
    let ax = sx.clone().try_inverse()?;
    let ay = sy.clone().try_inverse()?;
    let t1 = (&ax * &sx * &ax * &sx).trace();
    let t2 = (&ay * &sy * &ay * &sy).trace();
    let t3 = (&ax * &sxy * &ay * sxy.transpose()).trace();
    Some((t1 + t2 - 2.0 * t3).max(0.0).sqrt())
}

/// Best column matching by exhaustive enumeration of injections.
fn oracle_hardcorr(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let col = |m: &DMatrix<f64>, c: usize| -> Vec<f64> { m.column(c).iter().copied().collect() };
    let (dx, dy) = (x.ncols(), y.ncols());
    let table: Vec<Vec<f64>> = if dx <= dy {
        (0..dx)
            .map(|i| (0..dy).map(|j| oracle_pearson(&col(x, i), &col(y, j)).unwrap_or(0.0)).collect())
            .collect()
    } else {
        (0..dy)
            .map(|j| (0..dx).map(|i| oracle_pearson(&col(x, i), &col(y, j)).unwrap_or(0.0)).collect())
            .collect()
    };
    fn best(t: &[Vec<f64>], row: usize, used: &mut [bool]) -> f64 {
        if row == t.len() {
            return 0.0;
        }
        let mut top = f64::NEG_INFINITY;
        for c in 0..t[0].len() {
            if !used[c] {
                used[c] = true;
                top = top.max(t[row][c] + best(t, row + 1, used));
                used[c] = false;
            }
        }
        top
    }
    let mut used = vec![false; table[0].len()];
    best(&table, 0, &mut used) / dx.min(dy) as f64
}

fn gridded(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0..7) as f64 / 2.0).collect()
}

#[test]
fn criterion_2_oracle_equivalence() {
    // Rank correlation against counting ranks plus a naive Pearson.
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut done = 0;
    let mut attempts = 0;
    while done < 200 {
        attempts += 1;
        assert!(attempts < 10_000, "too many degenerate draws");
        let n = rng.random_range(3..=8);
        let x = gridded(&mut rng, n);
        let y = gridded(&mut rng, n);
        match oracle_spearman(&x, &y) {
            Some(expect) => {
                let got = spearman(&x, &y).unwrap();
                assert!((got - expect).abs() <= 1e-12, "spearman {got} vs {expect} on {x:?} {y:?}");
                done += 1;
            }
            None => assert!(spearman(&x, &y).is_err(), "undefined case must fail: {x:?} {y:?}"),
        }
    }

    // Average precision against a full re-scan per threshold.
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut done = 0;
    while done < 200 {
        let n = rng.random_range(2..=8);
        let scores = gridded(&mut rng, n);
        let labels: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        match oracle_auprc(&scores, &labels) {
            Some(expect) => {
                let got = resim_core::eval::auprc(&scores, &labels).unwrap();
                assert!((got - expect).abs() <= 1e-12, "auprc {got} vs {expect}");
                done += 1;
            }
            None => assert!(resim_core::eval::auprc(&scores, &labels).is_err()),
        }
    }

    // Group census + separability against fresh triple loops.
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut done = 0;
    while done < 200 {
        let n = rng.random_range(4..=8);
        let groups: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
        let mut scores = BTreeMap::new();
        for i in 0..n {
            for j in (i + 1)..n {
                scores.insert((i, j), rng.random_range(0..7) as f64 / 2.0);
            }
        }
        match oracle_group(&scores, &groups) {
            Some((conf, ap)) => {
                let out = conformity_groups(&scores, &groups).unwrap();
                assert!((out.conformity - conf).abs() <= 1e-12, "{} vs {conf}", out.conformity);
                assert!((out.auprc - ap).abs() <= 1e-12, "{} vs {ap}", out.auprc);
                done += 1;
            }
            None => assert!(conformity_groups(&scores, &groups).is_err()),
        }
    }

    // Layer census + decay correlation against fresh quadruple loops.
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for _ in 0..200 {
        let layers = rng.random_range(3..=5);
        let mut scores = BTreeMap::new();
        for i in 0..layers {
            for j in (i + 1)..layers {
                scores.insert((i, j), rng.random_range(0..7) as f64 / 2.0);
            }
        }
        let (conf, rho) = oracle_layers(&scores, layers);
        let out = conformity_layers(&scores, layers).unwrap();
        assert!((out.conformity - conf).abs() <= 1e-12);
        match (out.spearman, rho) {
            (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-12, "{a} vs {b}"),
            (None, None) => {}
            (a, b) => panic!("spearman definedness disagrees: {a:?} vs {b:?}"),
        }
    }

    // Dense-oracle checks on 6x2 inputs.
    let registry = Registry::standard();
    let ctx = EvalContext::with_seed(7);
    let distcorr = registry.get("distcorr").unwrap();
    let gulp = registry.get("gulp").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for _ in 0..50 {
        let x = randn(&mut rng, 6, 2);
        let y = randn(&mut rng, 6, 2);
        let expect = oracle_distcorr(&x, &y).expect("gaussian clouds are non-degenerate");
        let got = eval(distcorr, &x, &y, &ctx);
        assert!((got - expect).abs() <= 1e-8, "distcorr {got} vs {expect}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut done = 0;
    while done < 50 {
        let x = randn(&mut rng, 6, 2);
        let y = randn(&mut rng, 6, 2);
        let Some(expect) = oracle_gulp0(&x, &y) else { continue };
        let got = eval(gulp, &x, &y, &ctx);
        assert!((got - expect).abs() <= 1e-8, "gulp {got} vs {expect}");
        done += 1;
    }

    // Factorial enumeration for the matched-correlation measure.
    let hardcorr = registry.get("hardcorr").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    for _ in 0..60 {
        let (dx, dy) = (rng.random_range(2..=5), rng.random_range(2..=5));
        let x = randn(&mut rng, 10, dx);
        let y = randn(&mut rng, 10, dy);
        let expect = oracle_hardcorr(&x, &y);
        let got = eval(hardcorr, &x, &y, &ctx);
        assert!((got - expect).abs() <= 1e-10, "hardcorr {got} vs {expect}");
    }

    println!("ACCEPTANCE 2 oracle equivalence: PASS");
}

#[test]
fn criterion_3_closed_form_chain_anchors() {
    let theta = 0.2;
    let layers = 5;
    let chain = gen_rotation_chain(23, layers, 120, 16, theta).unwrap();
    let registry = Registry::standard();
    let ctx = EvalContext::with_seed(7);
    let angshape = registry.get("angshape").unwrap();

    let mut measured = BTreeMap::new();
    for i in 0..layers {
        for j in (i + 1)..layers {
            let d = eval(angshape, chain[i].matrix(), chain[j].matrix(), &ctx);
            let expect = theta * (j - i) as f64;
            assert!((d - expect).abs() <= 1e-8, "angshape({i},{j}) = {d}, want {expect}");
            measured.insert((i, j), -d);
        }
    }

    // The measured pipeline conforms exactly: every nested comparison involves
    // strictly different gaps, far apart relative to float noise.
    let out = conformity_layers(&measured, layers).unwrap();
    assert_eq!(out.conformity, 1.0, "measured conformity");
    // Equal gaps tie in the anchor but differ at noise level when measured, so
    // the measured rank correlation sits just above 0.95 rather than at 1.
    let rho = out.spearman.expect("distances vary");
    assert!(rho >= 0.95, "measured decay correlation {rho}");

    // On the closed-form anchor scores the decay correlation is exactly 1.
    let mut anchor = BTreeMap::new();
    for i in 0..layers {
        for j in (i + 1)..layers {
            anchor.insert((i, j), -(theta * (j - i) as f64));
        }
    }
    let out = conformity_layers(&anchor, layers).unwrap();
    assert_eq!(out.conformity, 1.0, "anchor conformity");
    let rho = out.spearman.expect("anchor distances vary");
    assert!((rho - 1.0).abs() <= 1e-12, "anchor decay correlation {rho}");

    println!("ACCEPTANCE 3 closed-form chain anchors: PASS");
}

fn group_scores(
    m: &MeasureDescriptor,
    reps: &[resim_core::Representation],
    ctx: &EvalContext,
) -> BTreeMap<(usize, usize), f64> {
    let mut scores = BTreeMap::new();
    for i in 0..reps.len() {
        for j in (i + 1)..reps.len() {
            let v = eval(m, reps[i].matrix(), reps[j].matrix(), ctx);
            scores.insert((i, j), oriented(m, v));
        }
    }
    scores
}

#[test]
fn criterion_4_group_test_end_to_end() {
    let start = Instant::now();
    let registry = Registry::standard();
    let ctx = EvalContext::with_seed(7);

    let reps = gen_grouped(41, 3, 5, 200, 16, 0.01, BetweenMap::RandomLinear).unwrap();
    let groups: Vec<usize> = (0..reps.len()).map(|i| i / 5).collect();
    for id in ["cka", "orthproc", "jaccard"] {
        let m = registry.get(id).unwrap();
        let out = conformity_groups(&group_scores(m, &reps, &ctx), &groups).unwrap();
        assert_eq!(out.auprc, 1.0, "{id} auprc");
        assert_eq!(out.conformity, 1.0, "{id} conformity");
    }

    // Negative control: group bases that are rotations of one shared cloud are
    // invisible to a rotation-invariant measure.
    let reps = gen_grouped(41, 3, 5, 200, 16, 0.01, BetweenMap::Orthogonal).unwrap();
    let m = registry.get("cka").unwrap();
    let out = conformity_groups(&group_scores(m, &reps, &ctx), &groups).unwrap();
    assert!(out.auprc <= 0.6, "cka auprc on rotated groups: {}", out.auprc);

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    println!("ACCEPTANCE 4 group test end to end: PASS ({elapsed:?})");
}

#[test]
fn criterion_5_prediction_test_end_to_end() {
    let deltas: Vec<f64> = (0..10).map(|m| 0.1 * m as f64).collect();
    let (outs, reps) = gen_outputs(5, 150, 10, 16, &deltas).unwrap();
    let registry = Registry::standard();
    let ctx = EvalContext::with_seed(7);
    let orthproc = registry.get("orthproc").unwrap();

    let mut dist = Vec::new();
    let mut jsd = Vec::new();
    for i in 0..reps.len() {
        for j in (i + 1)..reps.len() {
            dist.push(eval(orthproc, reps[i].matrix(), reps[j].matrix(), &ctx));
            jsd.push(jsd_mean(&outs[i], &outs[j]).unwrap());
        }
    }
    assert_eq!(dist.len(), 45);
    let rho = spearman(&dist, &jsd).unwrap();
    assert!(rho >= 0.9, "spearman(orthproc distance, jsd) = {rho}");

    // Identical outputs make the target gap constant: the harness must report
    // a failed cell, never a score.
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for m in 0..3 {
        write_npy(&dir.path().join(format!("rep{m}.npy")), &randn(&mut rng, 20, 4)).unwrap();
    }
    let probs = DMatrix::from_element(20, 4, 0.25);
    write_npy(&dir.path().join("probs.npy"), &probs).unwrap();
    let labels: Vec<usize> = (0..20).map(|i| i % 4).collect();
    write_labels_csv(&dir.path().join("labels.csv"), &labels).unwrap();

    let config = RunConfig {
        run: RunSection {
            seed: 1,
            out_dir: "unused".into(),
            measures: vec!["orthproc".into()],
        },
        tests: vec![TestSection {
            kind: TestKind::AccuracyCorr,
            name: "degenerate".into(),
            dataset: "default".into(),
            arch: "default".into(),
            groups: vec![vec!["rep0.npy".into(), "rep1.npy".into(), "rep2.npy".into()]],
            outputs: vec!["probs.npy".into(), "probs.npy".into(), "probs.npy".into()],
            labels: Some("labels.csv".into()),
            layer_order: vec![],
            output_diff: None,
        }],
    };
    let report = harness::run(&config, dir.path(), None).unwrap();
    assert_eq!(report.cells.len(), 1);
    let cell = &report.cells[0];
    assert!(cell.is_failed(), "degenerate case must fail, got {:?}", cell.status);
    assert!(cell.score.is_none());
    assert!(cell.status.starts_with("failed:"), "{}", cell.status);

    println!("ACCEPTANCE 5 prediction test end to end: PASS");
}

#[test]
fn criterion_6_output_divergence_literalness() {
    let point = |hot: usize| -> ModelOutputs {
        let probs = DMatrix::from_fn(2, 2, |_, c| if c == hot { 1.0 } else { 0.0 });
        ModelOutputs::new(probs, vec![0, 0]).unwrap()
    };
    let a = point(0);
    let b = point(1);
    assert_eq!(jsd_mean(&a, &b).unwrap(), 0.5, "opposed point masses");
    assert_eq!(jsd_mean(&a, &a).unwrap(), 0.0, "identical point masses");

    assert_eq!(disagreement(&a, &a).unwrap(), 0.0, "identical predictions");
    assert_eq!(disagreement(&a, &b).unwrap(), 1.0, "fully opposed predictions");

    println!("ACCEPTANCE 6 output divergence literalness: PASS");
}

#[test]
fn criterion_7_heat_trace_estimator_agreement() {
    let params = HeatTraceParams::default();
    for n in 5..=8usize {
        let mut rng = ChaCha8Rng::seed_from_u64(70 + n as u64);
        let x = randn(&mut rng, n, 3);
        let exact = heat_trace_with(&x, &params, 7, TraceEstimator::ExactSpectrum).unwrap();
        let slq = heat_trace_with(&x, &params, 7, TraceEstimator::StochasticLanczos).unwrap();
        for (t, (&e, &s)) in exact.t_grid.iter().zip(exact.traces.iter().zip(&slq.traces)) {
            let rel = (s - e).abs() / e;
            assert!(rel <= 0.05, "n={n} t={t}: exact {e}, slq {s}, rel {rel}");
        }
    }

    let registry = Registry::standard();
    let ctx = EvalContext::with_seed(7);
    let imd = registry.get("imd").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(80);
    let x = randn(&mut rng, 30, 4);
    assert_eq!(eval(imd, &x, &x, &ctx), 0.0, "self divergence under a shared seed");

    println!("ACCEPTANCE 7 heat trace estimator agreement: PASS");
}

fn run_bin(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_resim"))
        .args(args)
        .output()
        .expect("binary should launch")
}

fn read_reports(dir: &Path) -> Vec<(String, Vec<u8>)> {
    ["report.json", "report.csv", "report.txt"]
        .iter()
        .map(|f| (f.to_string(), std::fs::read(dir.join(f)).expect(f)))
        .collect()
}

#[test]
fn criterion_8_determinism_and_failure_plumbing() {
    let start = Instant::now();

    for suite in ["groups", "layers", "prediction"] {
        let dir = TempDir::new().unwrap();
        let root = dir.path().to_str().unwrap();
        let out = run_bin(&["synth", "--suite", suite, "--seed", "42", "--out", root]);
        assert!(out.status.success(), "synth {suite}: {}", String::from_utf8_lossy(&out.stderr));
        let config = format!("{root}/run.toml");

        let variants: [(&str, Vec<&str>); 4] = [
            ("a", vec![]),
            ("b", vec![]),
            ("j1", vec!["--jobs", "1"]),
            ("j8", vec!["--jobs", "8"]),
        ];
        let mut reports = Vec::new();
        for (tag, pre) in &variants {
            let out_dir = dir.path().join(format!("out_{tag}"));
            let out_str = out_dir.to_str().unwrap().to_string();
            let mut args: Vec<&str> = pre.clone();
            args.extend(["bench", "--config", &config, "--out-dir", &out_str, "--quiet"]);
            let out = run_bin(&args);
            assert!(out.status.success(), "bench {suite} {tag}: {}", String::from_utf8_lossy(&out.stderr));
            reports.push(read_reports(&out_dir));
        }
        for other in &reports[1..] {
            for ((name, base), (_, got)) in reports[0].iter().zip(other) {
                assert!(base == got, "suite {suite}: {name} differs between runs");
            }
        }
    }

    // Inject a numerical failure: one group of constant-row representations
    // breaks the CCA-based measure on a majority of its pairs, while the other
    // nine requested measures stay healthy. The failed cell must surface with
    // the worst rank and a flag, not vanish or score. The constant rows use
    // dyadic entries so the column means are exact and centering leaves a
    // matrix of true rank zero.
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut groups: Vec<Vec<std::path::PathBuf>> = Vec::new();
    for g in 0..3 {
        let mut chain = Vec::new();
        for m in 0..5 {
            let mat = if g == 2 {
                DMatrix::from_fn(40, 8, |_, c| (m + 1) as f64 * 0.25 + c as f64 * 0.5)
            } else {
                randn(&mut rng, 40, 8)
            };
            let name = format!("g{g}m{m}.npy");
            write_npy(&dir.path().join(&name), &mat).unwrap();
            chain.push(name.into());
        }
        groups.push(chain);
    }
    let measures = [
        "pwcca", "jaccard", "ranksim", "2nd-cos", "magdiff", "concdiff", "unifdiff", "rsmdiff",
        "eos", "permproc",
    ];
    let config = RunConfig {
        run: RunSection {
            seed: 7,
            out_dir: "out".into(),
            measures: measures.iter().map(|s| s.to_string()).collect(),
        },
        tests: vec![TestSection {
            kind: TestKind::Group,
            name: "injected".into(),
            dataset: "default".into(),
            arch: "default".into(),
            groups,
            outputs: vec![],
            labels: None,
            layer_order: vec![],
            output_diff: None,
        }],
    };
    let config_path = dir.path().join("run.toml");
    std::fs::write(&config_path, toml::to_string_pretty(&config).unwrap()).unwrap();

    let out_dir = dir.path().join("report");
    let out = run_bin(&[
        "bench",
        "--config",
        config_path.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--quiet",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let report: BenchmarkReport =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    let cell = report.cells.iter().find(|c| c.measure == "pwcca").unwrap();
    assert!(cell.is_failed(), "pwcca must fail: {:?}", cell.status);
    assert!(cell.status.starts_with("failed:"));
    assert_eq!(cell.failed_units, 60, "pairs touching the injected group");
    assert_eq!(cell.total_units, 105);
    assert!(cell.score.is_none());
    for c in &report.cells {
        if c.measure != "pwcca" {
            assert!(!c.is_failed(), "{} should survive: {}", c.measure, c.status);
        }
    }
    assert_eq!(report.ranks["pwcca"], vec![10.0], "failed cell takes the worst rank");
    assert_eq!(report.median_rank["pwcca"], 10.0);
    assert_eq!(report.failed_cells["pwcca"], 1);
    let table = std::fs::read_to_string(out_dir.join("report.txt")).unwrap();
    let row = table.lines().find(|l| l.contains("pwcca")).unwrap();
    assert!(row.contains("10.0!"), "flagged rank missing in: {row}");

    // Strict mode turns the failed cell into a non-zero exit.
    let strict_dir = dir.path().join("strict");
    let out = run_bin(&[
        "bench",
        "--config",
        config_path.to_str().unwrap(),
        "--out-dir",
        strict_dir.to_str().unwrap(),
        "--strict",
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(3), "strict exit code");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 300, "took {elapsed:?}");
    println!("ACCEPTANCE 8 determinism and failure plumbing: PASS ({elapsed:?})");
}
