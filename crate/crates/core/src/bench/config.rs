use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::unfold::SolverOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// comparisons of true distances under Gaussian comparison noise
    OrdinalNoise,
    /// received power with per-link random path-loss exponents
    Rss,
    /// time of arrival with Gaussian timing noise
    Toa,
}

impl ExperimentKind {
    /// Stable id mixed into every trial stream.
    pub(crate) fn stream_id(self) -> u64 {
        match self {
            ExperimentKind::OrdinalNoise => 1,
            ExperimentKind::Rss => 2,
            ExperimentKind::Toa => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::OrdinalNoise => "ordinal",
            ExperimentKind::Rss => "rss",
            ExperimentKind::Toa => "toa",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ordinal" | "ordinal-noise" => Ok(ExperimentKind::OrdinalNoise),
            "rss" => Ok(ExperimentKind::Rss),
            "toa" => Ok(ExperimentKind::Toa),
            other => Err(Error::Config(format!(
                "unknown experiment kind '{other}' (expected ordinal, rss or toa)"
            ))),
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Noise setting of one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseLevel {
    Sigma(f64),
    ExponentRange { a: f64, b: f64 },
    NormalizedVariance(f64),
}

impl NoiseLevel {
    /// Scalar used for plotting: sigma, `b - a`, or `c sigma_T^2`.
    pub fn value(&self) -> f64 {
        match *self {
            NoiseLevel::Sigma(s) => s,
            NoiseLevel::ExponentRange { a, b } => b - a,
            NoiseLevel::NormalizedVariance(v) => v,
        }
    }
}

impl fmt::Display for NoiseLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseLevel::Sigma(s) => write!(f, "{s}"),
            NoiseLevel::ExponentRange { a, b } => write!(f, "{a}:{b}"),
            NoiseLevel::NormalizedVariance(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub anchors: usize,
    pub noise: NoiseLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// sensors are placed uniformly in `[0, field_side]^2`
    pub field_side: f64,
    pub anchors: Vec<usize>,
    pub targets: usize,
    /// comparison noise standard deviations (ordinal kind)
    pub sigma: Vec<f64>,
    /// path-loss exponent intervals `[a, b]` (rss kind)
    pub exponent_ranges: Vec<(f64, f64)>,
    /// exponent assumed by the fixed-calibration baseline (rss kind)
    pub calibration_exponent: f64,
    /// normalized timing variances `c sigma_T^2` (toa kind)
    pub normalized_variance: Vec<f64>,
    /// propagation speed `c` (toa kind)
    pub propagation_speed: f64,
    pub trials: usize,
    pub seed: u64,
    pub solver: SolverOptions<f64>,
}

impl ExperimentConfig {
    /// Unit square, `m` in 5..=20, sigma in {0, 0.1, 0.3, 0.5}.
    pub fn ordinal_default() -> Self {
        Self {
            kind: ExperimentKind::OrdinalNoise,
            field_side: 1.0,
            anchors: vec![5, 10, 15, 20],
            targets: 1,
            sigma: vec![0.0, 0.1, 0.3, 0.5],
            exponent_ranges: vec![(2.0, 6.0)],
            calibration_exponent: 4.0,
            normalized_variance: log_spaced(-2.0, 2.0, 9),
            propagation_speed: 1.0,
            trials: 2000,
            seed: 0,
            solver: SolverOptions::default(),
        }
    }

    /// Unit square, exponents uniform on [2, 6], calibration exponent 4.
    pub fn rss_default() -> Self {
        Self {
            kind: ExperimentKind::Rss,
            ..Self::ordinal_default()
        }
    }

    /// 200 x 200 field, 20 anchors, `c sigma_T^2` log-spaced over 1e-2..1e2.
    pub fn toa_default() -> Self {
        Self {
            kind: ExperimentKind::Toa,
            field_side: 200.0,
            anchors: vec![20],
            ..Self::ordinal_default()
        }
    }

    pub fn default_for(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::OrdinalNoise => Self::ordinal_default(),
            ExperimentKind::Rss => Self::rss_default(),
            ExperimentKind::Toa => Self::toa_default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return fail("trials must be >= 1".into());
        }
        if self.anchors.is_empty() {
            return fail("anchor grid is empty".into());
        }
        if let Some(&m) = self.anchors.iter().find(|&&m| m < 2) {
            return fail(format!("anchor count {m} is below 2"));
        }
        if self.targets == 0 {
            return fail("target count must be >= 1".into());
        }
        if !(self.field_side > 0.0 && self.field_side.is_finite()) {
            return fail("field side must be positive".into());
        }
        match self.kind {
            ExperimentKind::OrdinalNoise => {
                if self.sigma.is_empty() {
                    return fail("sigma grid is empty".into());
                }
                if self.sigma.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
                    return fail("sigma values must be finite and >= 0".into());
                }
            }
            ExperimentKind::Rss => {
                if self.exponent_ranges.is_empty() {
                    return fail("exponent range grid is empty".into());
                }
                for &(a, b) in &self.exponent_ranges {
                    if !(a >= 2.0 && a <= b && b.is_finite()) {
                        return fail(format!("invalid exponent range [{a}, {b}]: need 2 <= a <= b"));
                    }
                }
                if !(self.calibration_exponent > 0.0) {
                    return fail("calibration exponent must be positive".into());
                }
            }
            ExperimentKind::Toa => {
                if self.normalized_variance.is_empty() {
                    return fail("normalized variance grid is empty".into());
                }
                if self.normalized_variance.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return fail("normalized variances must be finite and >= 0".into());
                }
                if !(self.propagation_speed > 0.0) {
                    return fail("propagation speed must be positive".into());
                }
            }
        }
        self.solver.validate()
    }

    /// Anchor counts crossed with the noise levels of the configured kind,
    /// anchor-major.
    pub fn grid(&self) -> Vec<GridPoint> {
        let levels: Vec<NoiseLevel> = match self.kind {
            ExperimentKind::OrdinalNoise => self.sigma.iter().map(|&s| NoiseLevel::Sigma(s)).collect(),
            ExperimentKind::Rss => self
                .exponent_ranges
                .iter()
                .map(|&(a, b)| NoiseLevel::ExponentRange { a, b })
                .collect(),
            ExperimentKind::Toa => self
                .normalized_variance
                .iter()
                .map(|&v| NoiseLevel::NormalizedVariance(v))
                .collect(),
        };
        self.anchors
            .iter()
            .flat_map(|&anchors| levels.iter().map(move |&noise| GridPoint { anchors, noise }))
            .collect()
    }
}

/// `count` points `10^lo ..= 10^hi`, evenly spaced in the exponent.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![10f64.powf(lo)],
        _ => (0..count)
            .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (count - 1) as f64))
            .collect(),
    }
}
