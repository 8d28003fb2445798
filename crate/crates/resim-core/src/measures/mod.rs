//! The measure registry: a uniform, preprocessed interface over every
//! pairwise representation comparison in this crate.

pub mod alignment;
pub mod cca;
pub mod neighbors;
pub mod rsm;
pub mod stats;
pub mod topology;

use crate::error::{FailureKind, MeasureFailure};
use crate::linalg::{center_columns, normalize_matrix};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use topology::HeatTraceParams;

/// Whether larger values mean more similar or more different.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    Similarity,
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Alignment,
    Rsm,
    Cca,
    Neighborhood,
    Topology,
    Statistic,
}

/// Input normalization applied to each matrix independently before the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreprocessStep {
    CenterColumns,
    /// Rescale to Frobenius norm 1.
    UnitFrobenius,
    /// Rescale to Frobenius norm sqrt(N).
    FrobeniusSqrtN,
}

fn apply_steps(steps: &[PreprocessStep], m: &DMatrix<f64>) -> Result<DMatrix<f64>, MeasureFailure> {
    let mut out = m.clone();
    for step in steps {
        out = match step {
            PreprocessStep::CenterColumns => center_columns(&out),
            PreprocessStep::UnitFrobenius => normalize_matrix(&out, 1.0)?,
            PreprocessStep::FrobeniusSqrtN => {
                let target = (out.nrows() as f64).sqrt();
                normalize_matrix(&out, target)?
            }
        };
    }
    Ok(out)
}

/// Shared evaluation parameters; `Default` gives the standard configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalContext {
    /// Seed for the stochastic trace estimator (ignored by other measures).
    pub seed: u64,
    pub knn_k: usize,
    pub svcca_mass: f64,
    pub gulp_lambda: f64,
    pub uniformity_t: f64,
    pub heat: HeatTraceParams,
}

impl Default for EvalContext {
    fn default() -> Self {
        Self {
            seed: 0,
            knn_k: 10,
            svcca_mass: 0.99,
            gulp_lambda: 0.0,
            uniformity_t: 2.0,
            heat: HeatTraceParams::default(),
        }
    }
}

impl EvalContext {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Default::default() }
    }
}

/// Outcome of one measure on one pair, serializable for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum MeasureResult {
    Value { value: f64 },
    Failure { kind: FailureKind, message: String },
}

impl MeasureResult {
    pub fn value(&self) -> Option<f64> {
        match self {
            MeasureResult::Value { value } => Some(*value),
            MeasureResult::Failure { .. } => None,
        }
    }
}

impl From<Result<f64, MeasureFailure>> for MeasureResult {
    fn from(r: Result<f64, MeasureFailure>) -> Self {
        match r {
            Ok(value) => MeasureResult::Value { value },
            Err(f) => MeasureResult::Failure { kind: f.kind, message: f.message },
        }
    }
}

type Kernel = fn(&DMatrix<f64>, &DMatrix<f64>, &EvalContext) -> Result<f64, MeasureFailure>;

pub struct MeasureDescriptor {
    pub id: &'static str,
    pub name: &'static str,
    pub family: Family,
    pub orientation: Orientation,
    pub preprocessing: &'static [PreprocessStep],
    /// All measures compare instance-aligned rows except the spectral one.
    pub requires_same_rows: bool,
    kernel: Kernel,
}

impl MeasureDescriptor {
    pub fn evaluate(
        &self,
        x: &DMatrix<f64>,
        y: &DMatrix<f64>,
        ctx: &EvalContext,
    ) -> Result<f64, MeasureFailure> {
        if self.requires_same_rows && x.nrows() != y.nrows() {
            return Err(MeasureFailure::dimension_mismatch(format!(
                "{}: row counts {} and {} differ",
                self.id,
                x.nrows(),
                y.nrows()
            )));
        }
        let xp = apply_steps(self.preprocessing, x)?;
        let yp = apply_steps(self.preprocessing, y)?;
        let v = (self.kernel)(&xp, &yp, ctx)?;
        if !v.is_finite() {
            return Err(MeasureFailure::numerical(format!("{} produced a non-finite value", self.id)));
        }
        Ok(v)
    }

    pub fn evaluate_result(&self, x: &DMatrix<f64>, y: &DMatrix<f64>, ctx: &EvalContext) -> MeasureResult {
        self.evaluate(x, y, ctx).into()
    }
}

impl std::fmt::Debug for MeasureDescriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MeasureDescriptor")
            .field("id", &self.id)
            .field("orientation", &self.orientation)
            .finish()
    }
}

macro_rules! kernels {
    ($($fname:ident => $body:expr;)*) => {
        $(fn $fname(x: &DMatrix<f64>, y: &DMatrix<f64>, ctx: &EvalContext) -> Result<f64, MeasureFailure> {
            let _ = ctx;
            #[allow(clippy::redundant_closure_call)]
            ($body)(x, y, ctx)
        })*
    };
}

kernels! {
    k_second_cos => |x, y, ctx: &EvalContext| neighbors::second_order_cosine(x, y, ctx.knn_k);
    k_aligncos => |x, y, _| alignment::aligned_cosine(x, y);
    k_angshape => |x, y, _| alignment::angular_shape(x, y);
    k_cka => |x, y, _| rsm::cka_linear(x, y);
    k_concdiff => |x, y, _| stats::concentricity_diff(x, y);
    k_distcorr => |x, y, _| rsm::distance_correlation(x, y);
    k_eos => |x, y, _| rsm::eigenspace_overlap(x, y);
    k_gulp => |x, y, ctx: &EvalContext| rsm::gulp(x, y, ctx.gulp_lambda);
    k_hardcorr => |x, y, _| alignment::hard_correlation_match(x, y);
    k_imd => |x, y, ctx: &EvalContext| topology::imd(x, y, &ctx.heat, ctx.seed);
    k_jaccard => |x, y, ctx: &EvalContext| neighbors::jaccard_knn(x, y, ctx.knn_k);
    k_linreg => |x, y, _| alignment::linear_regression_r2(x, y);
    k_magdiff => |x, y, _| stats::magnitude_diff(x, y);
    k_orthproc => |x, y, _| alignment::orthogonal_procrustes(x, y);
    k_permproc => |x, y, _| alignment::permutation_procrustes(x, y);
    k_procdist => |x, y, _| alignment::procrustes_size_shape(x, y);
    k_pwcca => |x, y, _| cca::pwcca(x, y);
    k_ranksim => |x, y, ctx: &EvalContext| neighbors::rank_similarity(x, y, ctx.knn_k);
    k_rsa => |x, y, _| rsm::rsa_spearman(x, y);
    k_rsmdiff => |x, y, _| rsm::rsm_norm_diff(x, y);
    k_softcorr => |x, y, _| alignment::soft_correlation_match(x, y);
    k_svcca => |x, y, ctx: &EvalContext| cca::svcca(x, y, ctx.svcca_mass);
    k_unifdiff => |x, y, ctx: &EvalContext| stats::uniformity_diff(x, y, ctx.uniformity_t);
}

const CENTER: &[PreprocessStep] = &[PreprocessStep::CenterColumns];
const CENTER_UNIT: &[PreprocessStep] =
    &[PreprocessStep::CenterColumns, PreprocessStep::UnitFrobenius];
const CENTER_SQRT_N: &[PreprocessStep] =
    &[PreprocessStep::CenterColumns, PreprocessStep::FrobeniusSqrtN];
const RAW: &[PreprocessStep] = &[];

/// The full measure set, ordered by id.
pub struct Registry {
    measures: Vec<MeasureDescriptor>,
}

impl Registry {
    pub fn standard() -> Self {
        use Family::*;
        use Orientation::*;
        let m = |id, name, family, orientation, preprocessing, requires_same_rows, kernel| {
            MeasureDescriptor { id, name, family, orientation, preprocessing, requires_same_rows, kernel }
        };
        let measures = vec![
            m("2nd-cos", "Second-order cosine similarity", Neighborhood, Similarity, RAW, true, k_second_cos as Kernel),
            m("aligncos", "Aligned cosine similarity", Alignment, Similarity, RAW, true, k_aligncos),
            m("angshape", "Angular shape distance", Alignment, Distance, CENTER_UNIT, true, k_angshape),
            m("cka", "Centered kernel alignment (linear)", Rsm, Similarity, CENTER, true, k_cka),
            m("concdiff", "Concentricity difference", Statistic, Distance, RAW, true, k_concdiff),
            m("distcorr", "Distance correlation", Rsm, Similarity, RAW, true, k_distcorr),
            m("eos", "Eigenspace overlap score", Rsm, Similarity, RAW, true, k_eos),
            m("gulp", "Linear-probe transfer distance", Rsm, Distance, CENTER_SQRT_N, true, k_gulp),
            m("hardcorr", "Hard correlation match", Alignment, Similarity, RAW, true, k_hardcorr),
            m("imd", "Intrinsic multi-scale distance", Topology, Distance, RAW, false, k_imd),
            m("jaccard", "k-NN Jaccard similarity", Neighborhood, Similarity, RAW, true, k_jaccard),
            m("linreg", "Linear regression R2", Alignment, Similarity, CENTER, true, k_linreg),
            m("magdiff", "Magnitude difference", Statistic, Distance, RAW, true, k_magdiff),
            m("orthproc", "Orthogonal Procrustes distance", Alignment, Distance, CENTER_UNIT, true, k_orthproc),
            m("permproc", "Permutation Procrustes distance", Alignment, Distance, RAW, true, k_permproc),
            m("procdist", "Procrustes size-and-shape distance", Alignment, Distance, CENTER, true, k_procdist),
            m("pwcca", "Projection-weighted CCA", Cca, Similarity, RAW, true, k_pwcca),
            m("ranksim", "k-NN rank similarity", Neighborhood, Similarity, RAW, true, k_ranksim),
            m("rsa", "Representational similarity analysis", Rsm, Similarity, RAW, true, k_rsa),
            m("rsmdiff", "RSM norm difference", Rsm, Distance, RAW, true, k_rsmdiff),
            m("softcorr", "Soft correlation match", Alignment, Similarity, RAW, true, k_softcorr),
            m("svcca", "Singular vector CCA", Cca, Similarity, RAW, true, k_svcca),
            m("unifdiff", "Uniformity difference", Statistic, Distance, RAW, true, k_unifdiff),
        ];
        debug_assert!(measures.windows(2).all(|w| w[0].id < w[1].id));
        Self { measures }
    }

    pub fn measures(&self) -> &[MeasureDescriptor] {
        &self.measures
    }

    pub fn get(&self, id: &str) -> Option<&MeasureDescriptor> {
        self.measures.iter().find(|m| m.id == id)
    }

    pub fn ids(&self) -> Vec<&'static str> {
        self.measures.iter().map(|m| m.id).collect()
    }

    /// Resolve a user-provided id list, preserving registry order; `Err` is
    /// the first unknown id.
    pub fn subset(&self, ids: &[String]) -> Result<Vec<&MeasureDescriptor>, String> {
        for id in ids {
            if self.get(id).is_none() {
                return Err(id.clone());
            }
        }
        Ok(self.measures.iter().filter(|m| ids.iter().any(|i| i == m.id)).collect())
    }
}
