//! Monte-Carlo experiment harness.
//!
//! Every trial draws from streams keyed by `(seed, kind, m, trial, component)`.
//! Trials run in parallel but are reduced in trial order, so results are
//! bit-identical for any number of worker threads.

mod config;
mod metrics;
mod report;
mod trial;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{log_spaced, ExperimentConfig, ExperimentKind, GridPoint, NoiseLevel};
pub use metrics::{kendall_tau, ls_slope, mean_and_se, spearman};
pub use report::{write_csv, CSV_HEADER};
pub use trial::{run_trial, run_trial_on_field, sample_field, Method, MethodOutcome, TrialOutcome};

use crate::error::{Error, Result};

/// Flagged-trial fraction above which a grid point is unreliable.
pub const MAX_FLAGGED_FRACTION: f64 = 0.10;

/// What the `tau` column measures.
pub const TAU_DEFINITION: &str =
    "Kendall tau-a between true and recalibrated estimated anchor-to-target distances, averaged over targets";

/// Aggregate of one method at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub anchors: usize,
    pub noise: NoiseLevel,
    pub method: Method,
    pub rmse: f64,
    /// delta-method standard error of the RMSE
    pub rmse_se: f64,
    pub mse: f64,
    pub mse_se: f64,
    pub tau: Option<f64>,
    pub tau_se: Option<f64>,
    /// mean count of comparisons flipped by the channel (rss kind)
    pub flipped_comparisons: Option<f64>,
    pub trials: usize,
    pub flagged: usize,
    pub unreliable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub tau_definition: String,
    pub points: Vec<PointResult>,
}

impl ExperimentResult {
    pub fn unreliable(&self) -> bool {
        self.points.iter().any(|p| p.unreliable)
    }

    /// Points of one method in grid order.
    pub fn curve(&self, method: Method) -> Vec<&PointResult> {
        self.points.iter().filter(|p| p.method == method).collect()
    }

    pub fn point(&self, method: Method, anchors: usize, noise: f64) -> Option<&PointResult> {
        self.points
            .iter()
            .find(|p| p.method == method && p.anchors == anchors && p.noise.value() == noise)
    }
}

/// Runs every trial at every grid point.
pub fn run_benchmark(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let mut points = Vec::new();
    for gp in config.grid() {
        let outcomes: Vec<TrialOutcome> = (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(config, &gp, t))
            .collect::<Result<_>>()?;
        points.extend(summarize(config, &gp, &outcomes));
    }
    Ok(ExperimentResult {
        config: config.clone(),
        tau_definition: TAU_DEFINITION.to_string(),
        points,
    })
}

/// Ordinal UNLOC on raw powers against fixed-exponent and genie-aided
/// distance inversion, on identical channel realizations.
pub fn rss_comparison_suite(config: &ExperimentConfig) -> Result<ExperimentResult> {
    if config.kind != ExperimentKind::Rss {
        return Err(Error::Config(format!("rss suite needs kind rss, got {}", config.kind)));
    }
    run_benchmark(config)
}

/// Ordinal UNLOC against UNLOC on ranged distances, on identical TOA draws.
pub fn toa_comparison_suite(config: &ExperimentConfig) -> Result<ExperimentResult> {
    if config.kind != ExperimentKind::Toa {
        return Err(Error::Config(format!("toa suite needs kind toa, got {}", config.kind)));
    }
    run_benchmark(config)
}

fn summarize(config: &ExperimentConfig, gp: &GridPoint, outcomes: &[TrialOutcome]) -> Vec<PointResult> {
    let taus: Vec<f64> = outcomes.iter().filter_map(|o| o.tau).collect();
    let (tau, tau_se) = if taus.is_empty() {
        (None, None)
    } else {
        let (m, se) = mean_and_se(&taus);
        (Some(m), Some(se))
    };
    let flips: Vec<f64> = outcomes
        .iter()
        .filter_map(|o| o.flipped_comparisons.map(|f| f as f64))
        .collect();
    let flipped_comparisons = (!flips.is_empty()).then(|| mean_and_se(&flips).0);

    Method::for_kind(config.kind)
        .iter()
        .map(|&method| {
            let mut errors = Vec::with_capacity(outcomes.len() * config.targets);
            let mut flagged = 0;
            for o in outcomes {
                if let Some(mo) = o.method(method) {
                    errors.extend_from_slice(&mo.squared_errors);
                    flagged += usize::from(mo.flagged);
                }
            }
            let (mse, mse_se) = mean_and_se(&errors);
            let rmse = mse.sqrt();
            let rmse_se = if rmse > 0.0 { mse_se / (2.0 * rmse) } else { 0.0 };
            let ordinal = method == Method::OrdinalUnloc;
            PointResult {
                anchors: gp.anchors,
                noise: gp.noise,
                method,
                rmse,
                rmse_se,
                mse,
                mse_se,
                tau: if ordinal { tau } else { None },
                tau_se: if ordinal { tau_se } else { None },
                flipped_comparisons: if ordinal { flipped_comparisons } else { None },
                trials: outcomes.len(),
                flagged,
                unreliable: errors.is_empty()
                    || flagged as f64 > MAX_FLAGGED_FRACTION * outcomes.len() as f64,
            }
        })
        .collect()
}
