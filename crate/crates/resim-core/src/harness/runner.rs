//! Executes configured tests: loads inputs, evaluates every (measure, pair)
//! work item in parallel, and reduces scores in canonical order so the report
//! is identical regardless of worker count.

use super::config::{ConfigError, OutputDiff, RunConfig, TestKind, TestSection};
use super::report::{aggregate, BenchmarkReport, Cell};
use crate::error::MeasureFailure;
use crate::eval;
use crate::io;
use crate::measures::{EvalContext, MeasureDescriptor, Orientation, Registry};
use crate::repr::{ModelOutputs, Representation};
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("failed to load {path}: {message}")]
    Load { path: PathBuf, message: String },
    #[error("test '{test}': inconsistent inputs: {message}")]
    Input { test: String, message: String },
    #[error("could not build worker pool: {0}")]
    Pool(String),
}

/// Runs every configured test; relative paths resolve against `base_dir`.
/// `jobs` bounds the worker pool (None uses all cores); results do not depend
/// on it.
pub fn run(
    config: &RunConfig,
    base_dir: &Path,
    jobs: Option<usize>,
) -> Result<BenchmarkReport, HarnessError> {
    config.validate()?;
    let registry = Registry::standard();
    let selected: Vec<&MeasureDescriptor> = if config.run.measures.is_empty() {
        registry.measures().iter().collect()
    } else {
        registry.subset(&config.run.measures).map_err(ConfigError::UnknownMeasure)?
    };
    let ctx = EvalContext::with_seed(config.run.seed);

    let execute = || -> Result<Vec<Cell>, HarnessError> {
        let mut cells = Vec::new();
        for test in &config.tests {
            let test_cells = match test.kind {
                TestKind::AccuracyCorr | TestKind::OutputCorr => {
                    run_prediction_test(test, &selected, &ctx, base_dir)?
                }
                TestKind::Group => run_group_test(test, &selected, &ctx, base_dir)?,
                TestKind::Layer => run_layer_test(test, &selected, &ctx, base_dir)?,
            };
            cells.extend(test_cells);
        }
        Ok(cells)
    };
    let cells = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| HarnessError::Pool(e.to_string()))?
            .install(execute),
        None => execute(),
    }?;

    let ids: Vec<String> = selected.iter().map(|m| m.id.to_string()).collect();
    Ok(aggregate(config.run.seed, cells, &ids))
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}

fn load_rep(
    base: &Path,
    path: &Path,
    layer: usize,
    group: Option<String>,
) -> Result<Representation, HarnessError> {
    let full = resolve(base, path);
    io::load_representation(&full, stem(path), layer, group)
        .map_err(|e| HarnessError::Load { path: full, message: e.to_string() })
}

fn load_outputs(base: &Path, probs: &Path, labels: &[usize]) -> Result<ModelOutputs, HarnessError> {
    let full = resolve(base, probs);
    let matrix = io::read_matrix(&full)
        .map_err(|e| HarnessError::Load { path: full.clone(), message: e.to_string() })?;
    ModelOutputs::new(matrix, labels.to_vec())
        .map_err(|e| HarnessError::Load { path: full, message: e.to_string() })
}

fn oriented(orientation: Orientation, v: f64) -> f64 {
    match orientation {
        Orientation::Similarity => v,
        Orientation::Distance => -v,
    }
}

/// Per-measure pairwise outcome over one model set.
struct PairScores {
    /// (i, j), i < j -> oriented similarity; failed pairs are absent.
    scores: BTreeMap<(usize, usize), f64>,
    first_failure: Option<MeasureFailure>,
    failed: usize,
    total: usize,
}

impl PairScores {
    fn majority_failed(&self) -> bool {
        self.failed * 2 > self.total
    }
}

/// Evaluates all measures on all unordered pairs; the work-item list and the
/// reduction order are fixed up front, so parallelism cannot reorder results.
fn eval_all_pairs(
    measures: &[&MeasureDescriptor],
    mats: &[&DMatrix<f64>],
    ctx: &EvalContext,
) -> Vec<PairScores> {
    let n = mats.len();
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let items: Vec<(usize, usize, usize)> = (0..measures.len())
        .flat_map(|m| pairs.iter().map(move |&(i, j)| (m, i, j)))
        .collect();
    let raw: Vec<Result<f64, MeasureFailure>> = items
        .par_iter()
        .map(|&(m, i, j)| measures[m].evaluate(mats[i], mats[j], ctx))
        .collect();

    let mut out: Vec<PairScores> = measures
        .iter()
        .map(|_| PairScores {
            scores: BTreeMap::new(),
            first_failure: None,
            failed: 0,
            total: pairs.len(),
        })
        .collect();
    for ((m, i, j), res) in items.into_iter().zip(raw) {
        match res {
            Ok(v) => {
                out[m].scores.insert((i, j), oriented(measures[m].orientation, v));
            }
            Err(f) => {
                out[m].failed += 1;
                out[m].first_failure.get_or_insert(f);
            }
        }
    }
    out
}

fn cell_base(test: &TestSection, measure: &MeasureDescriptor) -> Cell {
    Cell {
        test: test.name.clone(),
        kind: test.kind,
        dataset: test.dataset.clone(),
        arch: test.arch.clone(),
        measure: measure.id.to_string(),
        score: None,
        secondary: None,
        status: "ok".to_string(),
        failed_units: 0,
        total_units: 0,
    }
}

fn failed_cell(mut cell: Cell, failure: &MeasureFailure, failed: usize, total: usize) -> Cell {
    cell.status = Cell::failed_status(failure.kind);
    cell.failed_units = failed;
    cell.total_units = total;
    cell
}

fn run_prediction_test(
    test: &TestSection,
    measures: &[&MeasureDescriptor],
    ctx: &EvalContext,
    base: &Path,
) -> Result<Vec<Cell>, HarnessError> {
    let labels_path = resolve(base, test.labels.as_ref().expect("validated"));
    let labels = io::read_labels(&labels_path)
        .map_err(|e| HarnessError::Load { path: labels_path, message: e.to_string() })?;

    let mut models: Vec<(Representation, ModelOutputs)> = Vec::new();
    for (rep_path, probs_path) in test.model_paths().iter().zip(&test.outputs) {
        let rep = load_rep(base, rep_path, 0, None)?;
        let outs = load_outputs(base, probs_path, &labels)?;
        if outs.probs().nrows() != rep.n() {
            return Err(HarnessError::Input {
                test: test.name.clone(),
                message: format!(
                    "{} has {} output rows for {} instances",
                    probs_path.display(),
                    outs.probs().nrows(),
                    rep.n()
                ),
            });
        }
        models.push((rep, outs));
    }
    // Canonical pair order: lexicographic by model id (stable on ties).
    models.sort_by(|a, b| a.0.model_id.cmp(&b.0.model_id));

    let n = models.len();
    let mut deltas = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (&models[i].1, &models[j].1);
            let d = match (test.kind, test.output_diff) {
                (TestKind::AccuracyCorr, _) => eval::accuracy_diff(a, b),
                (TestKind::OutputCorr, Some(OutputDiff::Jsd)) => {
                    eval::jsd_mean(a, b).map_err(|e| HarnessError::Input {
                        test: test.name.clone(),
                        message: e.to_string(),
                    })?
                }
                (TestKind::OutputCorr, Some(OutputDiff::Disagreement)) => {
                    eval::disagreement(a, b).map_err(|e| HarnessError::Input {
                        test: test.name.clone(),
                        message: e.to_string(),
                    })?
                }
                _ => unreachable!("validated"),
            };
            deltas.push(((i, j), d));
        }
    }

    let mats: Vec<&DMatrix<f64>> = models.iter().map(|(r, _)| r.matrix()).collect();
    let all = eval_all_pairs(measures, &mats, ctx);

    let mut cells = Vec::new();
    for (measure, ps) in measures.iter().zip(all) {
        let base_cell = cell_base(test, measure);
        if ps.majority_failed() {
            let failure = ps.first_failure.as_ref().expect("failures counted");
            cells.push(failed_cell(base_cell, failure, ps.failed, ps.total));
            continue;
        }
        // Oriented distance (-similarity) against the output gap, over pairs
        // that produced a score.
        let mut dist = Vec::new();
        let mut gap = Vec::new();
        for &(pair, d) in &deltas {
            if let Some(&s) = ps.scores.get(&pair) {
                dist.push(-s);
                gap.push(d);
            }
        }
        match eval::spearman(&dist, &gap) {
            Ok(rho) => {
                let mut cell = base_cell;
                cell.score = Some(rho);
                cell.failed_units = ps.failed;
                cell.total_units = ps.total;
                cells.push(cell);
            }
            Err(f) => cells.push(failed_cell(base_cell, &f, ps.failed, ps.total)),
        }
    }
    Ok(cells)
}

fn run_group_test(
    test: &TestSection,
    measures: &[&MeasureDescriptor],
    ctx: &EvalContext,
    base: &Path,
) -> Result<Vec<Cell>, HarnessError> {
    let mut models: Vec<(Representation, usize)> = Vec::new();
    for (g, group) in test.groups.iter().enumerate() {
        for path in group {
            models.push((load_rep(base, path, 0, Some(format!("group{g}")))?, g));
        }
    }
    models.sort_by(|a, b| a.0.model_id.cmp(&b.0.model_id));
    let group_of: Vec<usize> = models.iter().map(|&(_, g)| g).collect();
    let mats: Vec<&DMatrix<f64>> = models.iter().map(|(r, _)| r.matrix()).collect();
    let all = eval_all_pairs(measures, &mats, ctx);

    let mut cells = Vec::new();
    for (measure, ps) in measures.iter().zip(all) {
        let base_cell = cell_base(test, measure);
        if ps.majority_failed() {
            let failure = ps.first_failure.as_ref().expect("failures counted");
            cells.push(failed_cell(base_cell, failure, ps.failed, ps.total));
            continue;
        }
        match eval::conformity_groups(&ps.scores, &group_of) {
            Ok(out) => {
                let mut cell = base_cell;
                cell.score = Some(out.auprc);
                cell.secondary = Some(out.conformity);
                cell.failed_units = ps.failed;
                cell.total_units = ps.total;
                cells.push(cell);
            }
            Err(f) => cells.push(failed_cell(base_cell, &f, ps.failed, ps.total)),
        }
    }
    Ok(cells)
}

fn run_layer_test(
    test: &TestSection,
    measures: &[&MeasureDescriptor],
    ctx: &EvalContext,
    base: &Path,
) -> Result<Vec<Cell>, HarnessError> {
    let mut chains: Vec<Vec<Representation>> = Vec::new();
    for chain in test.layer_chains() {
        let mut layers = Vec::new();
        for (l, path) in chain.iter().enumerate() {
            layers.push(load_rep(base, path, l, None)?);
        }
        chains.push(layers);
    }
    let n_layers = chains[0].len();
    let n_models = chains.len();

    // Work items span (measure, model, layer pair).
    let pairs: Vec<(usize, usize)> = (0..n_layers)
        .flat_map(|i| ((i + 1)..n_layers).map(move |j| (i, j)))
        .collect();
    let items: Vec<(usize, usize, usize, usize)> = (0..measures.len())
        .flat_map(|m| {
            let pairs = &pairs;
            (0..n_models).flat_map(move |c| pairs.iter().map(move |&(i, j)| (m, c, i, j)))
        })
        .collect();
    let raw: Vec<Result<f64, MeasureFailure>> = items
        .par_iter()
        .map(|&(m, c, i, j)| {
            measures[m].evaluate(chains[c][i].matrix(), chains[c][j].matrix(), ctx)
        })
        .collect();

    let mut per_measure: Vec<Vec<BTreeMap<(usize, usize), f64>>> =
        vec![vec![BTreeMap::new(); n_models]; measures.len()];
    let mut first_failure: Vec<Option<MeasureFailure>> = (0..measures.len()).map(|_| None).collect();
    for ((m, c, i, j), res) in items.into_iter().zip(raw) {
        match res {
            Ok(v) => {
                per_measure[m][c].insert((i, j), oriented(measures[m].orientation, v));
            }
            Err(f) => {
                first_failure[m].get_or_insert(f);
            }
        }
    }

    let mut cells = Vec::new();
    for ((measure, model_scores), failure) in
        measures.iter().zip(per_measure).zip(&first_failure)
    {
        let base_cell = cell_base(test, measure);
        // A model counts only if every layer pair scored.
        let mut conformities = Vec::new();
        let mut spearmans = Vec::new();
        let mut excluded = 0usize;
        let mut census_failure: Option<MeasureFailure> = None;
        for scores in &model_scores {
            if scores.len() != pairs.len() {
                excluded += 1;
                continue;
            }
            match eval::conformity_layers(scores, n_layers) {
                Ok(out) => {
                    conformities.push(out.conformity);
                    if let Some(rho) = out.spearman {
                        spearmans.push(rho);
                    }
                }
                Err(f) => {
                    excluded += 1;
                    census_failure.get_or_insert(f);
                }
            }
        }
        if excluded * 2 > n_models {
            let f = failure
                .clone()
                .or(census_failure)
                .unwrap_or_else(|| MeasureFailure::undefined_input("all models excluded"));
            cells.push(failed_cell(base_cell, &f, excluded, n_models));
            continue;
        }
        let mut cell = base_cell;
        cell.score = Some(conformities.iter().sum::<f64>() / conformities.len() as f64);
        cell.secondary = (!spearmans.is_empty())
            .then(|| spearmans.iter().sum::<f64>() / spearmans.len() as f64);
        cell.failed_units = excluded;
        cell.total_units = n_models;
        cells.push(cell);
    }
    Ok(cells)
}
