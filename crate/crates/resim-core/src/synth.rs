//! Seeded synthetic generators with closed-form ground truth, plus suite
//! writers that lay out ready-to-run benchmark directories.

use crate::harness::config::{OutputDiff, RunConfig, RunSection, TestKind, TestSection};
use crate::io::{write_labels_csv, write_npy, LoadError};
use crate::repr::{DataError, ModelOutputs, Representation};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Io(#[from] LoadError),
    #[error("failed to write {path}: {message}")]
    Write { path: PathBuf, message: String },
}

fn invalid(msg: impl Into<String>) -> SynthError {
    SynthError::InvalidParams(msg.into())
}

/// How group bases are derived from the shared base matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetweenMap {
    /// Random rotation per group: invisible to rotation-invariant measures,
    /// so it serves as a negative control.
    Orthogonal,
    /// Random dense linear map per group: recoverable structure.
    RandomLinear,
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    gaussian(rng, d, d).qr().q()
}

/// Planted-group families: one shared base B, per-group map M_g, per-member
/// noise. `member(g, m) = B * M_g + sigma_w * E_{g,m}`.
pub fn gen_grouped(
    seed: u64,
    n_groups: usize,
    members: usize,
    n: usize,
    d: usize,
    sigma_w: f64,
    between_map: BetweenMap,
) -> Result<Vec<Representation>, SynthError> {
    if n <= 12 {
        return Err(invalid("need more than 12 instances so default neighborhoods exist"));
    }
    if d < 2 {
        return Err(invalid("need at least 2 features"));
    }
    if !sigma_w.is_finite() || sigma_w < 0.0 {
        return Err(invalid("within-group noise must be finite and non-negative"));
    }
    if n_groups == 0 || members == 0 {
        return Err(invalid("need at least one group and one member"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = gaussian(&mut rng, n, d);
    let mut out = Vec::with_capacity(n_groups * members);
    for g in 0..n_groups {
        let map = match between_map {
            BetweenMap::Orthogonal => random_orthogonal(&mut rng, d),
            BetweenMap::RandomLinear => gaussian(&mut rng, d, d),
        };
        let group_base = &base * map;
        for m in 0..members {
            let noise = gaussian(&mut rng, n, d);
            let data = &group_base + noise * sigma_w;
            out.push(Representation::new(data, format!("g{g}m{m}"), 0, Some(format!("group{g}")))?);
        }
    }
    Ok(out)
}

/// Layer chains with exact pairwise angular distances: layer l sits at angle
/// l*theta from layer 0, so the angular shape distance between layers i and j
/// is |i-j|*theta.
///
/// Construction: r = min(d, 4, (n-1)/2) rank-one terms sigma*u_i(phi)*e_i^T
/// where each u_i(phi) rotates in a plane spanned by two orthonormal vectors
/// perpendicular to the all-ones vector. That keeps every layer column-centered
/// with unit Frobenius norm, and cross-products reduce to cos(phi_i - phi_j)
/// times a fixed rank-r projector.
pub fn gen_rotation_chain(
    seed: u64,
    layers: usize,
    n: usize,
    d: usize,
    theta: f64,
) -> Result<Vec<Representation>, SynthError> {
    if layers == 0 {
        return Err(invalid("need at least one layer"));
    }
    if d < 2 {
        return Err(invalid("need at least 2 features"));
    }
    if n < 3 {
        return Err(invalid("need at least 3 instances"));
    }
    if !theta.is_finite() || theta < 0.0 || layers as f64 * theta > std::f64::consts::FRAC_PI_2 {
        return Err(invalid("rotation budget layers*theta must stay within a quarter turn"));
    }
    let r = d.min(4).min((n - 1) / 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // 2r orthonormal vectors, all perpendicular to the all-ones direction.
    let ones = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut frame: Vec<DVector<f64>> = Vec::with_capacity(2 * r);
    while frame.len() < 2 * r {
        let mut v: DVector<f64> = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        for _ in 0..2 {
            v -= &ones * ones.dot(&v);
            for q in &frame {
                v -= q * q.dot(&v);
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            frame.push(v / norm);
        }
    }

    let sigma = 1.0 / (r as f64).sqrt();
    let mut out = Vec::with_capacity(layers);
    for l in 0..layers {
        let phi = theta * l as f64;
        let mut data = DMatrix::zeros(n, d);
        for i in 0..r {
            let dir = &frame[2 * i] * phi.cos() + &frame[2 * i + 1] * phi.sin();
            data.column_mut(i).copy_from(&(dir * sigma));
        }
        out.push(Representation::new(data, "chain", l, None)?);
    }
    Ok(out)
}

fn softmax_rows(logits: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = logits.clone();
    for i in 0..out.nrows() {
        let max = out.row(i).max();
        let mut sum = 0.0;
        for j in 0..out.ncols() {
            let e = (out[(i, j)] - max).exp();
            out[(i, j)] = e;
            sum += e;
        }
        for j in 0..out.ncols() {
            out[(i, j)] /= sum;
        }
    }
    out
}

/// Model families whose output divergence and representation distance both
/// grow with a per-model scale: outputs_m = softmax(Z + delta_m * E_m) and
/// rep_m = F + delta_m * F_m, with labels fixed at argmax Z.
pub fn gen_outputs(
    seed: u64,
    n: usize,
    classes: usize,
    d: usize,
    deltas: &[f64],
) -> Result<(Vec<ModelOutputs>, Vec<Representation>), SynthError> {
    if deltas.is_empty() {
        return Err(invalid("need at least one model scale"));
    }
    if deltas.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(invalid("model scales must be finite and non-negative"));
    }
    if classes < 2 || n < 2 || d < 1 {
        return Err(invalid("need n >= 2, classes >= 2, d >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let logits = gaussian(&mut rng, n, classes);
    let labels: Vec<usize> = (0..n)
        .map(|i| {
            let mut best = 0;
            for c in 1..classes {
                if logits[(i, c)] > logits[(i, best)] {
                    best = c;
                }
            }
            best
        })
        .collect();
    let base_rep = gaussian(&mut rng, n, d);

    let mut outs = Vec::with_capacity(deltas.len());
    let mut reps = Vec::with_capacity(deltas.len());
    for (m, &delta) in deltas.iter().enumerate() {
        let logit_noise = gaussian(&mut rng, n, classes);
        let probs = softmax_rows(&(&logits + logit_noise * delta));
        let rep_noise = gaussian(&mut rng, n, d);
        let rep = &base_rep + rep_noise * delta;
        outs.push(ModelOutputs::new(probs, labels.clone())?);
        reps.push(Representation::new(rep, format!("model{m}"), 0, None)?);
    }
    Ok((outs, reps))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteKind {
    Groups,
    Layers,
    Prediction,
}

impl std::str::FromStr for SuiteKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "groups" => Ok(SuiteKind::Groups),
            "layers" => Ok(SuiteKind::Layers),
            "prediction" => Ok(SuiteKind::Prediction),
            other => Err(format!("unknown suite '{other}' (expected groups|layers|prediction)")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub model_id: String,
    pub layer: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteManifest {
    pub suite: SuiteKind,
    pub seed: u64,
    pub representations: Vec<FileEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<String>,
    pub config: String,
}

fn write_text(path: &Path, text: &str) -> Result<(), SynthError> {
    std::fs::write(path, text)
        .map_err(|e| SynthError::Write { path: path.to_path_buf(), message: e.to_string() })
}

fn entry(rep: &Representation, path: &str) -> FileEntry {
    FileEntry {
        path: path.to_string(),
        model_id: rep.model_id.clone(),
        layer: rep.layer,
        group: rep.group.clone(),
    }
}

/// Generates one ready-to-run suite under `out_dir`: matrices in binary tensor
/// files, a manifest, and a `run.toml` consumable by the benchmark runner.
pub fn write_suite(kind: SuiteKind, seed: u64, out_dir: &Path) -> Result<SuiteManifest, SynthError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| SynthError::Write { path: out_dir.to_path_buf(), message: e.to_string() })?;
    let mut manifest = SuiteManifest {
        suite: kind,
        seed,
        representations: Vec::new(),
        outputs: Vec::new(),
        labels: None,
        config: "run.toml".to_string(),
    };
    let mut test = TestSection {
        kind: TestKind::Group,
        name: String::new(),
        dataset: "synthetic".to_string(),
        arch: "gaussian".to_string(),
        groups: Vec::new(),
        outputs: Vec::new(),
        labels: None,
        layer_order: Vec::new(),
        output_diff: None,
    };
    let mut extra_tests: Vec<TestSection> = Vec::new();

    match kind {
        SuiteKind::Groups => {
            let reps = gen_grouped(seed, 3, 5, 200, 16, 0.01, BetweenMap::RandomLinear)?;
            test.kind = TestKind::Group;
            test.name = "planted-groups".to_string();
            let mut groups: Vec<Vec<PathBuf>> = vec![Vec::new(); 3];
            for (i, rep) in reps.iter().enumerate() {
                let name = format!("{}.npy", rep.model_id);
                write_npy(&out_dir.join(&name), rep.matrix())?;
                manifest.representations.push(entry(rep, &name));
                groups[i / 5].push(PathBuf::from(&name));
            }
            test.groups = groups;
        }
        SuiteKind::Layers => {
            test.kind = TestKind::Layer;
            test.name = "rotation-chains".to_string();
            let mut chains: Vec<Vec<PathBuf>> = Vec::new();
            for model in 0..3u64 {
                let reps = gen_rotation_chain(seed.wrapping_add(model), 5, 120, 16, 0.2)?;
                let mut chain = Vec::new();
                for rep in &reps {
                    let name = format!("model{model}_layer{}.npy", rep.layer);
                    write_npy(&out_dir.join(&name), rep.matrix())?;
                    let mut e = entry(rep, &name);
                    e.model_id = format!("model{model}");
                    manifest.representations.push(e);
                    chain.push(PathBuf::from(&name));
                }
                chains.push(chain);
            }
            test.groups = chains;
        }
        SuiteKind::Prediction => {
            let deltas: Vec<f64> = (0..10).map(|m| 0.1 * m as f64).collect();
            let (outs, reps) = gen_outputs(seed, 150, 10, 16, &deltas)?;
            let mut rep_paths = Vec::new();
            let mut prob_paths = Vec::new();
            for (m, (rep, out)) in reps.iter().zip(&outs).enumerate() {
                let rep_name = format!("model{m}.npy");
                let prob_name = format!("probs{m}.npy");
                write_npy(&out_dir.join(&rep_name), rep.matrix())?;
                write_npy(&out_dir.join(&prob_name), out.probs())?;
                manifest.representations.push(entry(rep, &rep_name));
                manifest.outputs.push(prob_name.clone());
                rep_paths.push(PathBuf::from(rep_name));
                prob_paths.push(PathBuf::from(prob_name));
            }
            write_labels_csv(&out_dir.join("labels.csv"), outs[0].labels())?;
            manifest.labels = Some("labels.csv".to_string());

            test.kind = TestKind::AccuracyCorr;
            test.name = "accuracy-correlation".to_string();
            test.groups = vec![rep_paths.clone()];
            test.outputs = prob_paths.clone();
            test.labels = Some(PathBuf::from("labels.csv"));

            let mut jsd = test.clone();
            jsd.kind = TestKind::OutputCorr;
            jsd.name = "output-correlation".to_string();
            jsd.output_diff = Some(OutputDiff::Jsd);
            extra_tests.push(jsd);
        }
    }

    let mut tests = vec![test];
    tests.extend(extra_tests);
    let config = RunConfig {
        run: RunSection { seed, out_dir: PathBuf::from("results"), measures: Vec::new() },
        tests,
    };
    let config_text = toml::to_string_pretty(&config)
        .map_err(|e| SynthError::Write { path: out_dir.join("run.toml"), message: e.to_string() })?;
    write_text(&out_dir.join("run.toml"), &config_text)?;

    let mut manifest_json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| SynthError::Write { path: out_dir.join("manifest.json"), message: e.to_string() })?;
    manifest_json.push('\n');
    write_text(&out_dir.join("manifest.json"), &manifest_json)?;
    Ok(manifest)
}
