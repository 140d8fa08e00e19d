//! Target localization from one-bit ordinal distance comparisons.
//!
//! The pipeline turns a tensor of "which of `i`, `j` is closer to `k`"
//! comparisons into target coordinates in three stages:
//!
//! 1. [`rank`]: least-squares rank aggregation of every comparison slice into
//!    zero-sum proximity scores;
//! 2. [`funclearn`]: monotone affine maps from scores to distances, learned on
//!    the anchors and recalibrated per target;
//! 3. [`unfold`]: multi-start minimization of the unfolding cost
//!    `sum_i (||x - y_i||^2 - delta_i)^2`.
//!
//! [`ordinal`] and [`signals`] generate comparison data from distances or from
//! simulated RSS/TOA measurements, [`bench`] runs Monte-Carlo experiments and
//! [`ingest`] reads measurement logs.
//!
//! The numerical modules are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below name the `f64` instantiations used by the harness.

pub mod bench;
pub mod error;
pub mod funclearn;
pub mod ingest;
pub mod model;
pub mod ordinal;
pub mod pipeline;
pub mod rank;
pub mod rng;
pub mod scalar;
pub mod signals;
pub mod unfold;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use funclearn::{EstimatedDistanceMatrix, LinearMap};
pub use model::{Block, ComparisonTensor, DistanceMatrix, ProximityMatrix, SensorField};
pub use ordinal::{ComparisonNoiseModel, Orientation, SignalMatrix};
pub use pipeline::{ordinal_unloc, PipelineOutput};
pub use unfold::{LocalizationResult, SolverOptions, UnfoldingProblem};

pub type SensorField64 = SensorField<f64>;
pub type DistanceMatrix64 = DistanceMatrix<f64>;
pub type ProximityMatrix64 = ProximityMatrix<f64>;
pub type SignalMatrix64 = SignalMatrix<f64>;
pub type EstimatedDistanceMatrix64 = EstimatedDistanceMatrix<f64>;
pub type LinearMap64 = LinearMap<f64>;
pub type SolverOptions64 = SolverOptions<f64>;
pub type UnfoldingProblem64 = UnfoldingProblem<f64>;
pub type LocalizationResult64 = LocalizationResult<f64>;

pub type SensorField32 = SensorField<f32>;
pub type DistanceMatrix32 = DistanceMatrix<f32>;
pub type ProximityMatrix32 = ProximityMatrix<f32>;
pub type SignalMatrix32 = SignalMatrix<f32>;
pub type EstimatedDistanceMatrix32 = EstimatedDistanceMatrix<f32>;
pub type SolverOptions32 = SolverOptions<f32>;
pub type UnfoldingProblem32 = UnfoldingProblem<f32>;
pub type LocalizationResult32 = LocalizationResult<f32>;
