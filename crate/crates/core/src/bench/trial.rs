use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind, GridPoint, NoiseLevel};
use super::metrics::kendall_tau;
use crate::error::{Error, Result};
use crate::funclearn::{EstimatedDistanceMatrix, Stage};
use crate::model::{pairwise_distances, Block, ComparisonTensor, DistanceMatrix, SensorField};
use crate::ordinal::{count_disagreements, tensor_from_distances, tensor_from_signals, ComparisonNoiseModel};
use crate::pipeline::ordinal_unloc;
use crate::rng::{self, StreamRng};
use crate::signals::{
    invert_rss, rss_signal_matrix, sample_link_exponents, toa_signal_matrix, PathLossExponent, RssModel,
    ToaModel,
};
use crate::unfold::{localize_all, BatchLocalization, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// rank aggregation + function learning + unfolding on comparisons
    OrdinalUnloc,
    /// unfolding on distances `c * tau` from raw TOA
    Unloc,
    /// unfolding on distances inverted with one calibrated exponent
    UnlocFixedExponent,
    /// unfolding on distances inverted with each link's true exponent
    GenieAided,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::OrdinalUnloc => "ordinal-unloc",
            Method::Unloc => "unloc",
            Method::UnlocFixedExponent => "unloc-fixed-g",
            Method::GenieAided => "genie",
        }
    }

    pub fn for_kind(kind: ExperimentKind) -> &'static [Method] {
        match kind {
            ExperimentKind::OrdinalNoise => &[Method::OrdinalUnloc],
            ExperimentKind::Rss => &[Method::OrdinalUnloc, Method::UnlocFixedExponent, Method::GenieAided],
            ExperimentKind::Toa => &[Method::OrdinalUnloc, Method::Unloc],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    /// `||x_hat - x||^2` per successfully localized target
    pub squared_errors: Vec<f64>,
    /// a target failed or its solver hit the iteration limit
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub methods: Vec<MethodOutcome>,
    /// Kendall tau between true and recalibrated anchor-to-target distances,
    /// averaged over targets
    pub tau: Option<f64>,
    /// comparisons that differ from the noiseless distance tensor (rss kind)
    pub flipped_comparisons: Option<usize>,
}

impl TrialOutcome {
    pub fn method(&self, m: Method) -> Option<&MethodOutcome> {
        self.methods.iter().find(|o| o.method == m)
    }
}

// stream tags for the independent random components of a trial
const FIELD: u64 = 0;
const COMPARISON_NOISE: u64 = 1;
const TIMING_NOISE: u64 = 2;
const EXPONENTS: u64 = 3;
const SOLVER: u64 = 4;

fn trial_stream(config: &ExperimentConfig, anchors: usize, trial: usize, tag: u64) -> StreamRng {
    rng::stream(&[config.seed, config.kind.stream_id(), anchors as u64, trial as u64, tag])
}

/// Uniform placement in `[0, side]^2`. Depends only on (seed, kind, m, trial),
/// so every noise level of a grid sees the same fields.
pub fn sample_field(config: &ExperimentConfig, anchors: usize, trial: usize) -> SensorField<f64> {
    let mut r = trial_stream(config, anchors, trial, FIELD);
    let side = config.field_side;
    let mut draw = |count: usize| Array2::from_shape_simple_fn((count, 2), || side * r.random::<f64>());
    let a = draw(anchors);
    let t = draw(config.targets);
    SensorField::new(a, Some(t)).expect("finite coordinates")
}

/// One Monte-Carlo trial on a freshly sampled field.
pub fn run_trial(config: &ExperimentConfig, point: &GridPoint, trial: usize) -> Result<TrialOutcome> {
    let field = sample_field(config, point.anchors, trial);
    run_trial_on_field(config, point, &field, trial)
}

/// One trial on a given field. Random draws still derive from
/// `(seed, kind, m, trial)`; the field only replaces the sampled geometry.
pub fn run_trial_on_field(
    config: &ExperimentConfig,
    point: &GridPoint,
    field: &SensorField<f64>,
    trial: usize,
) -> Result<TrialOutcome> {
    let m = field.num_anchors();
    let d = pairwise_distances(field)?;
    let truth = field.targets().ok_or(Error::GroundTruthUnavailable)?;
    let anchors = field.anchors();
    let opts = SolverOptions {
        seed: rng::derive_seed(&[config.seed, config.kind.stream_id(), m as u64, trial as u64, SOLVER]),
        ..config.solver.clone()
    };

    let mut methods = Vec::new();
    let mut flipped = None;
    let ordinal_tensor: ComparisonTensor = match (config.kind, point.noise) {
        (ExperimentKind::OrdinalNoise, NoiseLevel::Sigma(sigma)) => {
            let seed = rng::derive_seed(&[config.seed, config.kind.stream_id(), m as u64, trial as u64, COMPARISON_NOISE]);
            tensor_from_distances(&d, &ComparisonNoiseModel::new(sigma, seed)?)
        }
        (ExperimentKind::Rss, NoiseLevel::ExponentRange { a, b }) => {
            let exponent = PathLossExponent::Uniform { a, b };
            exponent.validate()?;
            let mut r = trial_stream(config, m, trial, EXPONENTS);
            let g = sample_link_exponents(d.order(), &exponent, &mut r);
            let model = RssModel::default();
            let powers = rss_signal_matrix(&d, &model, &g)?;
            let (tensor, _) = tensor_from_signals(&powers);
            let reference = tensor_from_distances(&d, &ComparisonNoiseModel::noiseless());
            flipped = Some(count_disagreements(&tensor, &reference)?);

            let fixed = invert_cross_block(m, &d, |i, j| {
                invert_rss(&model, powers.get(i, j).expect("complete"), config.calibration_exponent)
            })?;
            methods.push(distance_method(Method::UnlocFixedExponent, anchors, fixed, truth, &opts)?);
            let genie = invert_cross_block(m, &d, |i, j| {
                invert_rss(&model, powers.get(i, j).expect("complete"), g[[i, j]])
            })?;
            methods.push(distance_method(Method::GenieAided, anchors, genie, truth, &opts)?);
            tensor
        }
        (ExperimentKind::Toa, NoiseLevel::NormalizedVariance(v)) => {
            let model = ToaModel::from_normalized_variance(config.propagation_speed, v)?;
            let mut r = trial_stream(config, m, trial, TIMING_NOISE);
            let times = toa_signal_matrix(&d, &model, &mut r)?;
            let ranged = invert_cross_block(m, &d, |i, j| {
                Ok(model.speed * times.get(i, j).expect("complete"))
            })?;
            methods.push(distance_method(Method::Unloc, anchors, ranged, truth, &opts)?);
            tensor_from_signals(&times).0
        }
        (kind, noise) => {
            return Err(Error::Config(format!("noise level {noise:?} does not match kind {kind}")));
        }
    };

    let (ordinal, tau) = match ordinal_unloc(anchors, &ordinal_tensor, &opts) {
        Ok(out) => {
            let outcome = score(Method::OrdinalUnloc, &out.localization, truth);
            let true_cross = d.block_view(Block::YX);
            let est = out.recalibrated.anchor_to_target();
            let taus: Vec<f64> = (0..true_cross.ncols())
                .filter_map(|j| {
                    kendall_tau(&true_cross.column(j).to_vec(), &est.column(j).to_vec()).ok()
                })
                .collect();
            let tau = (!taus.is_empty()).then(|| taus.iter().sum::<f64>() / taus.len() as f64);
            (outcome, tau)
        }
        Err(e) => {
            log::debug!("trial {trial}: ordinal pipeline failed: {e}");
            (
                MethodOutcome {
                    method: Method::OrdinalUnloc,
                    squared_errors: Vec::new(),
                    flagged: true,
                },
                None,
            )
        }
    };
    methods.insert(0, ordinal);
    Ok(TrialOutcome {
        trial,
        methods,
        tau,
        flipped_comparisons: flipped,
    })
}

/// `m x n` anchor-to-target estimates from a per-link inversion.
fn invert_cross_block(
    m: usize,
    d: &DistanceMatrix<f64>,
    mut invert: impl FnMut(usize, usize) -> Result<f64>,
) -> Result<Array2<f64>> {
    let n = d.num_targets();
    let mut out = Array2::zeros((m, n));
    for i in 0..m {
        for j in 0..n {
            out[[i, j]] = invert(i, m + j)?;
        }
    }
    Ok(out)
}

fn distance_method(
    method: Method,
    anchors: ArrayView2<'_, f64>,
    estimates: Array2<f64>,
    truth: ArrayView2<'_, f64>,
    opts: &SolverOptions<f64>,
) -> Result<MethodOutcome> {
    let est = EstimatedDistanceMatrix::from_values(estimates, Stage::Recalibrated)?;
    let batch = localize_all(anchors, &est, opts)?;
    Ok(score(method, &batch, truth))
}

fn score(method: Method, batch: &BatchLocalization<f64>, truth: ArrayView2<'_, f64>) -> MethodOutcome {
    let mut flagged = false;
    let mut squared_errors = Vec::with_capacity(batch.results.len());
    for (j, r) in batch.results.iter().enumerate() {
        match r {
            Ok(res) => {
                flagged |= res.hit_iteration_limit();
                let e: f64 = res
                    .position
                    .iter()
                    .zip(truth.row(j).iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                squared_errors.push(e);
            }
            Err(_) => flagged = true,
        }
    }
    MethodOutcome {
        method,
        squared_errors,
        flagged,
    }
}
