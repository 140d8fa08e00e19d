//! Construction of the comparison tensor, either from true distances under
//! additive Gaussian comparison noise or from measured distance proxies.

use ndarray::{Array2, Array3, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ComparisonTensor, DistanceMatrix};
use crate::rng;
use crate::scalar::{sign, Scalar};

/// Thresholded comparison `sgn(d - d' + xi)`; 0 on an exact tie.
pub fn compare_ordinal<T: Scalar>(d: T, d_prime: T, xi: T) -> i8 {
    sign(d - d_prime + xi)
}

/// Gaussian comparison noise `xi ~ N(0, sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonNoiseModel<T> {
    pub sigma: T,
    pub seed: u64,
}

impl<T: Scalar> ComparisonNoiseModel<T> {
    pub fn new(sigma: T, seed: u64) -> Result<Self> {
        if !(sigma >= T::zero()) || !sigma.is_finite() {
            return Err(Error::Domain(format!("noise sigma must be >= 0, got {sigma}")));
        }
        Ok(Self { sigma, seed })
    }

    pub fn noiseless() -> Self {
        Self {
            sigma: T::zero(),
            seed: 0,
        }
    }
}

/// Draws one noise value per unordered pair and slice; the mirrored entry uses
/// the negated draw, so every slice is skew-symmetric.
///
/// Slice `k` uses its own stream derived from `(seed, k)`, so the result does
/// not depend on how slices are scheduled.
pub fn tensor_from_distances<T: Scalar>(
    d: &DistanceMatrix<T>,
    noise: &ComparisonNoiseModel<T>,
) -> ComparisonTensor {
    let n = d.order();
    let slices: Vec<Array2<i8>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(&[noise.seed, k as u64]);
            let col = d.column(k);
            let mut z = Array2::<i8>::zeros((n, n));
            for i in 0..n {
                for j in (i + 1)..n {
                    let xi = if noise.sigma > T::zero() {
                        let e: f64 = rng.sample(StandardNormal);
                        noise.sigma * T::lit(e)
                    } else {
                        T::zero()
                    };
                    let v = compare_ordinal(col[i], col[j], xi);
                    z[[i, j]] = v;
                    z[[j, i]] = -v;
                }
            }
            z
        })
        .collect();
    stack_slices(n, slices)
}

fn stack_slices(n: usize, slices: Vec<Array2<i8>>) -> ComparisonTensor {
    let mut z = Array3::<i8>::zeros((n, n, n));
    for (k, s) in slices.into_iter().enumerate() {
        z.index_axis_mut(Axis(0), k).assign(&s);
    }
    ComparisonTensor::from_array_unchecked(z)
}

/// How a measured proxy varies with distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// e.g. time of arrival
    IncreasingWithDistance,
    /// e.g. received power
    DecreasingWithDistance,
}

/// Symmetric matrix of measured proxies with a missing-entry mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalMatrix<T> {
    values: Array2<T>,
    present: Array2<bool>,
    orientation: Orientation,
}

impl<T: Scalar> SignalMatrix<T> {
    /// `present[i][j]` marks measured entries. The diagonal is always treated
    /// as missing. Present entries must be finite and symmetric.
    pub fn new(values: Array2<T>, mut present: Array2<bool>, orientation: Orientation) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: values.ncols(),
            });
        }
        if present.dim() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: present.nrows(),
            });
        }
        for i in 0..n {
            present[[i, i]] = false;
            for j in 0..i {
                if present[[i, j]] != present[[j, i]] {
                    return Err(Error::Domain(format!("mask asymmetric at ({i},{j})")));
                }
                if present[[i, j]] {
                    let v = values[[i, j]];
                    if !v.is_finite() {
                        return Err(Error::NonFinite("signal value"));
                    }
                    if v != values[[j, i]] {
                        return Err(Error::Domain(format!("signal asymmetric at ({i},{j})")));
                    }
                }
            }
        }
        Ok(Self {
            values,
            present,
            orientation,
        })
    }

    /// Every off-diagonal entry present.
    pub fn complete(values: Array2<T>, orientation: Orientation) -> Result<Self> {
        let n = values.nrows();
        let present = Array2::from_elem((n, n), true);
        Self::new(values, present, orientation)
    }

    pub fn order(&self) -> usize {
        self.values.nrows()
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn get(&self, i: usize, j: usize) -> Option<T> {
        self.present[[i, j]].then(|| self.values[[i, j]])
    }

    pub fn values(&self) -> ArrayView2<'_, T> {
        self.values.view()
    }

    pub fn mask(&self) -> ArrayView2<'_, bool> {
        self.present.view()
    }

    /// Proxy oriented so that larger means farther.
    fn farness(&self, i: usize, j: usize) -> Option<T> {
        self.get(i, j).map(|v| match self.orientation {
            Orientation::IncreasingWithDistance => v,
            Orientation::DecreasingWithDistance => -v,
        })
    }
}

/// Emitted when more than half of a slice's comparisons are missing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceWarning {
    pub slice: usize,
    pub missing: usize,
    pub total: usize,
}

/// `z[k,i,j] = sgn(p_ik - p_jk)` with `p` the farness-oriented proxy.
///
/// The reference sensor is nearest to itself: `z[k,k,j] = -1` for `j != k`.
/// Comparisons with an unmeasured link are 0.
pub fn tensor_from_signals<T: Scalar>(s: &SignalMatrix<T>) -> (ComparisonTensor, Vec<SliceWarning>) {
    let n = s.order();
    let total = n * n.saturating_sub(1) / 2;
    let per_slice: Vec<(Array2<i8>, usize)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut z = Array2::<i8>::zeros((n, n));
            let mut missing = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = if i == k {
                        -1
                    } else if j == k {
                        1
                    } else {
                        match (s.farness(i, k), s.farness(j, k)) {
                            (Some(a), Some(b)) => sign(a - b),
                            _ => {
                                missing += 1;
                                0
                            }
                        }
                    };
                    z[[i, j]] = v;
                    z[[j, i]] = -v;
                }
            }
            (z, missing)
        })
        .collect();

    let mut warnings = Vec::new();
    let mut slices = Vec::with_capacity(n);
    for (k, (z, missing)) in per_slice.into_iter().enumerate() {
        if 2 * missing > total {
            log::warn!("slice {k}: {missing} of {total} comparisons missing");
            warnings.push(SliceWarning {
                slice: k,
                missing,
                total,
            });
        }
        slices.push(z);
    }
    (stack_slices(n, slices), warnings)
}

/// Number of unordered comparisons `(k, {i, j})` on which two tensors differ.
pub fn count_disagreements(a: &ComparisonTensor, b: &ComparisonTensor) -> Result<usize> {
    let n = a.order();
    if b.order() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.order(),
        });
    }
    let mut count = 0;
    for k in 0..n {
        for i in 0..n {
            for j in (i + 1)..n {
                if a.get(k, i, j) != b.get(k, i, j) {
                    count += 1;
                }
            }
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{pairwise_distances, SensorField};
    use ndarray::array;

    #[test]
    fn compare_examples() {
        assert_eq!(compare_ordinal(1.0, 2.0, 0.0), -1);
        assert_eq!(compare_ordinal(1.0, 1.0, 0.0), 0);
        assert_eq!(compare_ordinal(1.0, 2.0, 1.5), 1);
    }

    fn collinear() -> DistanceMatrix<f64> {
        let f = SensorField::from_points(&[vec![0.0], vec![1.0], vec![3.0]], Some(&[])).unwrap();
        pairwise_distances(&f).unwrap()
    }

    #[test]
    fn collinear_noiseless_slices() {
        let z = tensor_from_distances(&collinear(), &ComparisonNoiseModel::noiseless());
        // reference = sensor 1 (index 0): distances (0, 1, 3)
        assert_eq!(z.get(0, 1, 2), -1);
        assert_eq!(z.get(0, 2, 1), 1);
        assert_eq!(z.get(0, 0, 1), -1);
        // reference = sensor 2 (index 1): distances (1, 0, 2)
        assert_eq!(z.get(1, 0, 2), -1);
        assert_eq!(z.get(1, 0, 1), 1);
        // reference = sensor 3 (index 2): distances (3, 2, 0)
        assert_eq!(z.get(2, 0, 1), 1);
        assert_eq!(z.get(2, 1, 2), 1);
    }

    #[test]
    fn equidistant_pair_ties() {
        let f = SensorField::from_points(&[vec![-1.0], vec![0.0], vec![1.0]], Some(&[])).unwrap();
        let d = pairwise_distances(&f).unwrap();
        let z = tensor_from_distances(&d, &ComparisonNoiseModel::noiseless());
        assert_eq!(z.get(1, 0, 2), 0);
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let f = SensorField::from_points(
            &[vec![0.1, 0.2], vec![0.9, 0.4], vec![0.5, 0.5], vec![0.3, 0.8]],
            Some(&[vec![0.6, 0.1]]),
        )
        .unwrap();
        let d = pairwise_distances(&f).unwrap();
        let noise = ComparisonNoiseModel::new(0.3, 11).unwrap();
        assert_eq!(tensor_from_distances(&d, &noise), tensor_from_distances(&d, &noise));
        let other = ComparisonNoiseModel::new(0.3, 12).unwrap();
        assert_ne!(tensor_from_distances(&d, &noise), tensor_from_distances(&d, &other));
    }

    #[test]
    fn negative_sigma_rejected() {
        assert!(ComparisonNoiseModel::new(-0.1, 0).is_err());
        assert!(ComparisonNoiseModel::new(f64::NAN, 0).is_err());
    }

    #[test]
    fn rss_stronger_is_closer() {
        // k = 2, i = 0, j = 1
        let s = array![[0.0, 0.5, 0.9], [0.5, 0.0, 0.1], [0.9, 0.1, 0.0]];
        let sm = SignalMatrix::complete(s, Orientation::DecreasingWithDistance).unwrap();
        let (z, w) = tensor_from_signals(&sm);
        assert_eq!(z.get(2, 0, 1), -1);
        assert!(w.is_empty());
    }

    #[test]
    fn toa_longer_is_farther() {
        let s = array![[0.0, 0.5, 2.0], [0.5, 0.0, 1.0], [2.0, 1.0, 0.0]];
        let sm = SignalMatrix::complete(s, Orientation::IncreasingWithDistance).unwrap();
        let (z, _) = tensor_from_signals(&sm);
        assert_eq!(z.get(2, 0, 1), 1);
    }

    #[test]
    fn equal_signals_tie() {
        let s = array![[0.0, 0.5, 0.3], [0.5, 0.0, 0.3], [0.3, 0.3, 0.0]];
        let sm = SignalMatrix::complete(s, Orientation::DecreasingWithDistance).unwrap();
        let (z, _) = tensor_from_signals(&sm);
        assert_eq!(z.get(2, 0, 1), 0);
    }

    #[test]
    fn reference_is_nearest_to_itself() {
        let s = array![[0.0, 0.5, 0.3], [0.5, 0.0, 0.2], [0.3, 0.2, 0.0]];
        let sm = SignalMatrix::complete(s, Orientation::DecreasingWithDistance).unwrap();
        let (z, _) = tensor_from_signals(&sm);
        for k in 0..3 {
            for j in 0..3 {
                if j != k {
                    assert_eq!(z.get(k, k, j), -1);
                    assert_eq!(z.get(k, j, k), 1);
                }
            }
        }
    }

    #[test]
    fn sparse_slices_warn() {
        let n = 5;
        let values = Array2::from_elem((n, n), 1.0);
        let mut present = Array2::from_elem((n, n), false);
        present[[0, 1]] = true;
        present[[1, 0]] = true;
        let sm = SignalMatrix::new(values, present, Orientation::IncreasingWithDistance).unwrap();
        let (z, w) = tensor_from_signals(&sm);
        // slice 4 has only the 4 self comparisons out of 10
        assert!(w.iter().any(|w| w.slice == 4 && w.missing == 6 && w.total == 10));
        assert_eq!(z.get(4, 0, 1), 0);
    }

    #[test]
    fn asymmetric_signal_rejected() {
        let s = array![[0.0, 0.5], [0.4, 0.0]];
        assert!(SignalMatrix::complete(s, Orientation::IncreasingWithDistance).is_err());
    }
}
