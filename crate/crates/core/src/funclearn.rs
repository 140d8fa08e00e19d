//! Learning monotone affine maps from proximity scores to distances.
//!
//! Each anchor `k` gets a map fitted on its column of anchor-to-anchor
//! proximities against the known anchor distances; applying it to the target
//! rows gives preliminary anchor-to-target distances. A second fit per target
//! then re-expresses those estimates as an increasing affine image of the
//! target's own proximity column, so per-target orderings follow the scores.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Block, ProximityMatrix};
use crate::scalar::Scalar;

/// Smallest admissible slope; fits with a non-positive optimum are clamped here.
pub const MIN_SLOPE: f64 = 1e-9;

/// `g(psi) = c0 + c1 * psi` with `c1 > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearMap<T> {
    pub c0: T,
    pub c1: T,
}

impl<T: Scalar> LinearMap<T> {
    pub fn apply(&self, psi: T) -> T {
        self.c0 + self.c1 * psi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitStatus {
    Unconstrained,
    /// least-squares slope was <= 0 and was clamped to [`MIN_SLOPE`]
    Clamped,
    /// constant abscissa; slope set to [`MIN_SLOPE`]
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit<T> {
    pub map: LinearMap<T>,
    pub status: FitStatus,
}

/// Least squares `min ||c0 + c1 psi - d||` over `c1 > 0`.
///
/// The one-dimensional constrained optimum is the unconstrained one when its
/// slope is positive, and otherwise the clamped slope with the intercept
/// re-fitted through the means.
pub fn fit_linear_map<T: Scalar>(psi: ArrayView1<'_, T>, d: ArrayView1<'_, T>) -> Result<LinearFit<T>> {
    if psi.len() != d.len() {
        return Err(Error::DimensionMismatch {
            expected: psi.len(),
            got: d.len(),
        });
    }
    let len = psi.len();
    if len < 2 {
        return Err(Error::Underdetermined(len));
    }
    if psi.iter().chain(d.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("regression data"));
    }
    let count = T::from_count(len);
    let mean_psi = psi.sum() / count;
    let mean_d = d.sum() / count;
    let (mut sxx, mut sxy) = (T::zero(), T::zero());
    for (&x, &y) in psi.iter().zip(d.iter()) {
        let dx = x - mean_psi;
        sxx += dx * dx;
        sxy += dx * (y - mean_d);
    }
    let eps = T::lit(MIN_SLOPE);
    let clamped = |status| LinearFit {
        map: LinearMap {
            c0: mean_d - eps * mean_psi,
            c1: eps,
        },
        status,
    };
    if sxx <= T::zero() {
        if d.iter().any(|&y| y != mean_d) {
            log::warn!("degenerate fit: constant proximities with varying distances");
        }
        return Ok(clamped(FitStatus::Degenerate));
    }
    let slope = sxy / sxx;
    if slope <= T::zero() {
        return Ok(clamped(FitStatus::Clamped));
    }
    Ok(LinearFit {
        map: LinearMap {
            c0: mean_d - slope * mean_psi,
            c1: slope,
        },
        status: FitStatus::Unconstrained,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    Preliminary,
    Recalibrated,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub clamped: usize,
    pub degenerate: usize,
    /// anchors whose fit failed; their rows hold the mean of the other anchors
    pub failed_anchors: Vec<usize>,
}

impl FitDiagnostics {
    fn record(&mut self, status: FitStatus) {
        match status {
            FitStatus::Unconstrained => {}
            FitStatus::Clamped => self.clamped += 1,
            FitStatus::Degenerate => self.degenerate += 1,
        }
    }
}

/// Estimated anchor-to-target distances, anchors as rows (`m x n`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatedDistanceMatrix<T> {
    values: Array2<T>,
    stage: Stage,
    maps: Vec<LinearMap<T>>,
    diagnostics: FitDiagnostics,
}

impl<T: Scalar> EstimatedDistanceMatrix<T> {
    /// Wraps externally produced estimates (e.g. distances inverted from a
    /// physical model) so they can be fed to the unfolding solver.
    pub fn from_values(values: Array2<T>, stage: Stage) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("estimated distances"));
        }
        Ok(Self {
            values,
            stage,
            maps: Vec::new(),
            diagnostics: FitDiagnostics::default(),
        })
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn num_anchors(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_targets(&self) -> usize {
        self.values.ncols()
    }

    /// `m x n` block, anchors as rows.
    pub fn anchor_to_target(&self) -> ArrayView2<'_, T> {
        self.values.view()
    }

    /// Estimated distances from every anchor to target `j`.
    pub fn target_column(&self, j: usize) -> ArrayView1<'_, T> {
        self.values.column(j)
    }

    /// Maps fitted at this stage: one per anchor (preliminary) or per target
    /// (recalibrated).
    pub fn maps(&self) -> &[LinearMap<T>] {
        &self.maps
    }

    pub fn diagnostics(&self) -> &FitDiagnostics {
        &self.diagnostics
    }
}

/// Per-anchor fits on the anchor block, applied to the target rows.
///
/// Each fit includes the self pair `(psi_kk, 0)`.
pub fn preliminary_distances<T: Scalar>(
    psi: &ProximityMatrix<T>,
    d_y: ArrayView2<'_, T>,
) -> Result<EstimatedDistanceMatrix<T>> {
    let m = psi.num_anchors();
    let n = psi.num_targets();
    if d_y.dim() != (m, m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: d_y.nrows(),
        });
    }
    if m < 2 {
        return Err(Error::Underdetermined(m));
    }
    let psi_y = psi.block_view(Block::Y);
    let psi_xy = psi.block_view(Block::XY);

    let mut diagnostics = FitDiagnostics::default();
    let mut values = Array2::<T>::zeros((m, n));
    let mut maps = Vec::with_capacity(m);
    let mut ok_rows = Vec::with_capacity(m);
    for k in 0..m {
        match fit_linear_map(psi_y.column(k), d_y.column(k)) {
            Ok(fit) => {
                diagnostics.record(fit.status);
                for j in 0..n {
                    values[[k, j]] = fit.map.apply(psi_xy[[j, k]]);
                }
                maps.push(fit.map);
                ok_rows.push(k);
            }
            Err(e) => {
                log::warn!("anchor {k}: distance map fit failed: {e}");
                diagnostics.failed_anchors.push(k);
                maps.push(LinearMap {
                    c0: T::nan(),
                    c1: T::nan(),
                });
            }
        }
    }
    if ok_rows.is_empty() {
        return Err(Error::Domain("every anchor fit failed".into()));
    }
    if !diagnostics.failed_anchors.is_empty() {
        let count = T::from_count(ok_rows.len());
        let fill: Vec<T> = (0..n)
            .map(|j| ok_rows.iter().map(|&k| values[[k, j]]).sum::<T>() / count)
            .collect();
        for &k in &diagnostics.failed_anchors {
            for j in 0..n {
                values[[k, j]] = fill[j];
            }
        }
    }
    Ok(EstimatedDistanceMatrix {
        values,
        stage: Stage::Preliminary,
        maps,
        diagnostics,
    })
}

/// Per-target refit of the preliminary estimates against the target's own
/// proximity column; the output column is exactly affine in that column.
pub fn recalibrate<T: Scalar>(
    psi: &ProximityMatrix<T>,
    d_tilde: &EstimatedDistanceMatrix<T>,
) -> Result<EstimatedDistanceMatrix<T>> {
    let m = psi.num_anchors();
    let n = psi.num_targets();
    if d_tilde.values.dim() != (m, n) {
        return Err(Error::DimensionMismatch {
            expected: m * n,
            got: d_tilde.values.len(),
        });
    }
    let psi_yx = psi.block_view(Block::YX);
    let mut diagnostics = d_tilde.diagnostics.clone();
    let mut values = Array2::<T>::zeros((m, n));
    let mut maps = Vec::with_capacity(n);
    for j in 0..n {
        let fit = fit_linear_map(psi_yx.column(j), d_tilde.values.column(j))?;
        diagnostics.record(fit.status);
        let col: Array1<T> = psi_yx.column(j).mapv(|p| fit.map.apply(p));
        values.column_mut(j).assign(&col);
        maps.push(fit.map);
    }
    Ok(EstimatedDistanceMatrix {
        values,
        stage: Stage::Recalibrated,
        maps,
        diagnostics,
    })
}

/// Preliminary estimation followed by recalibration.
pub fn estimate_distances<T: Scalar>(
    psi: &ProximityMatrix<T>,
    d_y: ArrayView2<'_, T>,
) -> Result<EstimatedDistanceMatrix<T>> {
    let prelim = preliminary_distances(psi, d_y)?;
    recalibrate(psi, &prelim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn exact_affine() {
        let f = fit_linear_map(array![0.0_f64, 1.0, 2.0].view(), array![1.0, 3.0, 5.0].view()).unwrap();
        assert_eq!(f.map, LinearMap { c0: 1.0, c1: 2.0 });
        assert_eq!(f.status, FitStatus::Unconstrained);
    }

    #[test]
    fn negative_slope_is_clamped() {
        let f = fit_linear_map(array![0.0, 1.0, 2.0].view(), array![5.0, 3.0, 1.0].view()).unwrap();
        assert_eq!(f.status, FitStatus::Clamped);
        assert_eq!(f.map.c1, 1e-9);
        assert_eq!(f.map.c0, 3.0 - 1e-9);
    }

    #[test]
    fn identity() {
        let v = array![0.3_f64, -0.2, 1.7, 0.9];
        let f = fit_linear_map(v.view(), v.view()).unwrap();
        assert!(f.map.c0.abs() < 1e-15);
        assert!((f.map.c1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn too_short() {
        assert_eq!(
            fit_linear_map(array![1.0_f64].view(), array![2.0].view()),
            Err(Error::Underdetermined(1))
        );
    }

    #[test]
    fn constant_abscissa() {
        let f = fit_linear_map(array![0.5_f64, 0.5, 0.5].view(), array![1.0, 2.0, 3.0].view()).unwrap();
        assert_eq!(f.status, FitStatus::Degenerate);
        assert_eq!(f.map.c1, 1e-9);
        assert!((f.map.apply(0.5) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn recalibration_by_hand() {
        // m = 4 anchors, one target
        let mut psi = Array2::<f64>::zeros((5, 5));
        for (i, v) in [-0.3, -0.1, 0.1, 0.3].into_iter().enumerate() {
            psi[[i, 4]] = v;
        }
        let psi = ProximityMatrix::new(psi, 4).unwrap();
        let d_tilde =
            EstimatedDistanceMatrix::from_values(array![[1.0], [2.0], [2.0], [3.0]], Stage::Preliminary)
                .unwrap();
        let d_hat = recalibrate(&psi, &d_tilde).unwrap();
        let map = d_hat.maps()[0];
        assert!((map.c1 - 3.0).abs() < 1e-12);
        assert!((map.c0 - 2.0).abs() < 1e-12);
        let expected = [1.1, 1.7, 2.3, 2.9];
        for (a, e) in d_hat.target_column(0).iter().zip(expected) {
            assert!((a - e).abs() < 1e-12);
        }
        assert_eq!(d_hat.stage(), Stage::Recalibrated);
    }

    #[test]
    fn identity_maps_copy_the_cross_block() {
        // psi^Y equals D^Y, so each anchor map is the identity
        let d_y = array![[0.0, 1.0, 2.0], [1.0, 0.0, 1.5], [2.0, 1.5, 0.0]];
        let mut psi = Array2::<f64>::zeros((4, 4));
        psi.slice_mut(ndarray::s![..3, ..3]).assign(&d_y);
        psi.row_mut(3).assign(&array![0.7, 0.4, 1.1, 0.0]);
        let psi = ProximityMatrix::new(psi, 3).unwrap();
        let prelim = preliminary_distances(&psi, d_y.view()).unwrap();
        for k in 0..3 {
            assert!((prelim.anchor_to_target()[[k, 0]] - psi.get(3, k)).abs() < 1e-12);
        }
    }

    #[test]
    fn no_targets() {
        let d_y = array![[0.0, 1.0], [1.0, 0.0]];
        let psi = ProximityMatrix::new(array![[-0.5, 0.5], [0.5, -0.5]], 2).unwrap();
        let est = estimate_distances(&psi, d_y.view()).unwrap();
        assert_eq!(est.anchor_to_target().dim(), (2, 0));
    }

    #[test]
    fn failed_anchor_row_is_filled() {
        let d_y = array![[0.0, 1.0, f64::NAN], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]];
        let mut psi = Array2::<f64>::zeros((4, 4));
        psi.slice_mut(ndarray::s![..3, ..3]).assign(&array![
            [-0.5, 0.0, 0.5],
            [0.0, -0.5, 0.0],
            [0.5, 0.5, -0.5]
        ]);
        psi.row_mut(3).assign(&array![0.1, 0.2, 0.3, 0.0]);
        let psi = ProximityMatrix::new(psi, 3).unwrap();
        let prelim = preliminary_distances(&psi, d_y.view()).unwrap();
        assert_eq!(prelim.diagnostics().failed_anchors, vec![2]);
        let v = prelim.anchor_to_target();
        assert!((v[[2, 0]] - (v[[0, 0]] + v[[1, 0]]) / 2.0).abs() < 1e-15);
    }
}
