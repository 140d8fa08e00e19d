//! Shared data model: sensor geometry, distance and proximity matrices, and
//! the comparison tensor.
//!
//! Sensors are ordered anchors first: storage index `i < m` is anchor `i`,
//! index `m + j` is target `j`.

use ndarray::{s, Array2, Array3, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Anchor coordinates plus optional ground-truth target coordinates.
///
/// Rows are sensors, columns are the `q` spatial coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorField<T> {
    anchors: Array2<T>,
    targets: Option<Array2<T>>,
}

impl<T: Scalar> SensorField<T> {
    pub fn new(anchors: Array2<T>, targets: Option<Array2<T>>) -> Result<Self> {
        let q = anchors.ncols();
        if q == 0 {
            return Err(Error::Domain("dimension q must be positive".into()));
        }
        if let Some(t) = &targets {
            if t.ncols() != q {
                return Err(Error::DimensionMismatch {
                    expected: q,
                    got: t.ncols(),
                });
            }
        }
        let all_finite = anchors.iter().all(|v| v.is_finite())
            && targets.iter().flat_map(|t| t.iter()).all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::NonFinite("sensor coordinates"));
        }
        let field = Self { anchors, targets };
        if !field.is_well_posed() {
            log::warn!(
                "{} anchors in {} dimensions: localization is ill-posed below q+1 anchors",
                field.num_anchors(),
                q
            );
        }
        Ok(field)
    }

    /// Builds a field from coordinate lists. Every point must have the same length.
    pub fn from_points(anchors: &[Vec<T>], targets: Option<&[Vec<T>]>) -> Result<Self> {
        let q = anchors
            .first()
            .or_else(|| targets.and_then(|t| t.first()))
            .map(Vec::len)
            .ok_or(Error::EmptyProblem("sensor field without points"))?;
        let to_array = |pts: &[Vec<T>]| -> Result<Array2<T>> {
            let mut out = Array2::zeros((pts.len(), q));
            for (r, p) in pts.iter().enumerate() {
                if p.len() != q {
                    return Err(Error::DimensionMismatch {
                        expected: q,
                        got: p.len(),
                    });
                }
                for (c, v) in p.iter().enumerate() {
                    out[[r, c]] = *v;
                }
            }
            Ok(out)
        };
        let a = to_array(anchors)?;
        let t = targets.map(to_array).transpose()?;
        Self::new(a, t)
    }

    pub fn dimension(&self) -> usize {
        self.anchors.ncols()
    }

    pub fn num_anchors(&self) -> usize {
        self.anchors.nrows()
    }

    pub fn num_targets(&self) -> usize {
        self.targets.as_ref().map_or(0, |t| t.nrows())
    }

    pub fn num_sensors(&self) -> usize {
        self.num_anchors() + self.num_targets()
    }

    /// `m >= q + 1`.
    pub fn is_well_posed(&self) -> bool {
        self.num_anchors() > self.dimension()
    }

    pub fn anchors(&self) -> ArrayView2<'_, T> {
        self.anchors.view()
    }

    pub fn targets(&self) -> Option<ArrayView2<'_, T>> {
        self.targets.as_ref().map(|t| t.view())
    }

    /// All sensor coordinates, anchors first.
    pub fn positions(&self) -> Result<Array2<T>> {
        let targets = self.targets.as_ref().ok_or(Error::GroundTruthUnavailable)?;
        Ok(ndarray::concatenate(Axis(0), &[self.anchors.view(), targets.view()])
            .expect("column counts checked at construction"))
    }
}

/// Selects one of the four blocks of an anchor/target partitioned matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Block {
    /// anchor rows, anchor columns (m x m)
    Y,
    /// target rows, target columns (n x n)
    X,
    /// anchor rows, target columns (m x n)
    YX,
    /// target rows, anchor columns (n x m)
    XY,
}

/// Symmetric matrix of pairwise distances with a block boundary at `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix<T> {
    d: Array2<T>,
    m: usize,
}

impl<T: Scalar> DistanceMatrix<T> {
    /// Wraps an existing matrix after checking it is square, symmetric,
    /// nonnegative and zero on the diagonal.
    pub fn new(d: Array2<T>, m: usize) -> Result<Self> {
        let n = d.nrows();
        if d.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: d.ncols(),
            });
        }
        if m > n {
            return Err(Error::DimensionMismatch { expected: n, got: m });
        }
        for i in 0..n {
            if d[[i, i]] != T::zero() {
                return Err(Error::Domain(format!("nonzero diagonal entry at {i}")));
            }
            for j in 0..i {
                let v = d[[i, j]];
                if !v.is_finite() || v < T::zero() || v != d[[j, i]] {
                    return Err(Error::Domain(format!(
                        "entry ({i},{j}) is negative, non-finite or asymmetric"
                    )));
                }
            }
        }
        Ok(Self { d, m })
    }

    pub fn order(&self) -> usize {
        self.d.nrows()
    }

    pub fn num_anchors(&self) -> usize {
        self.m
    }

    pub fn num_targets(&self) -> usize {
        self.order() - self.m
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.d[[i, j]]
    }

    pub fn as_array(&self) -> ArrayView2<'_, T> {
        self.d.view()
    }

    /// Column `k`: distances from every sensor to reference sensor `k`.
    pub fn column(&self, k: usize) -> ArrayView1<'_, T> {
        self.d.column(k)
    }

    /// The requested block. `XY` is returned as the transpose of the stored
    /// `YX` block.
    pub fn block_view(&self, which: Block) -> ArrayView2<'_, T> {
        let m = self.m;
        match which {
            Block::Y => self.d.slice(s![..m, ..m]),
            Block::X => self.d.slice(s![m.., m..]),
            Block::YX => self.d.slice(s![..m, m..]),
            Block::XY => self.d.slice(s![..m, m..]).reversed_axes(),
        }
    }
}

/// Exact Euclidean distances between all sensors of a simulated field.
pub fn pairwise_distances<T: Scalar>(field: &SensorField<T>) -> Result<DistanceMatrix<T>> {
    let pos = field.positions()?;
    Ok(distances_between_rows(pos.view(), field.num_anchors()))
}

/// Distance matrix of the anchors alone (the only block known in practice).
pub fn anchor_distances<T: Scalar>(anchors: ArrayView2<'_, T>) -> DistanceMatrix<T> {
    distances_between_rows(anchors, anchors.nrows())
}

fn distances_between_rows<T: Scalar>(pos: ArrayView2<'_, T>, m: usize) -> DistanceMatrix<T> {
    let n = pos.nrows();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let v = euclidean(pos.row(i), pos.row(j));
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    DistanceMatrix { d, m }
}

pub fn euclidean<T: Scalar>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> T {
    squared_euclidean(a, b).sqrt()
}

pub fn squared_euclidean<T: Scalar>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> T {
    a.iter().zip(b.iter()).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// `N` slices of `N x N` ordinal comparisons, indexed `[k, i, j]`.
///
/// `z[k, i, j] = +1` means sensor `i` is farther from reference `k` than
/// sensor `j`; `-1` means closer; `0` is a tie or a missing comparison.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonTensor {
    z: Array3<i8>,
}

impl ComparisonTensor {
    pub fn zeros(n: usize) -> Self {
        Self {
            z: Array3::zeros((n, n, n)),
        }
    }

    /// Validates entries in {-1,0,1}, zero diagonals and skew-symmetry.
    pub fn from_array(z: Array3<i8>) -> Result<Self> {
        let (a, b, c) = z.dim();
        if a != b || b != c {
            return Err(Error::DimensionMismatch { expected: a, got: b.max(c) });
        }
        for k in 0..a {
            for i in 0..a {
                if z[[k, i, i]] != 0 {
                    return Err(Error::Domain(format!("slice {k}: nonzero diagonal at {i}")));
                }
                for j in 0..i {
                    let v = z[[k, i, j]];
                    if !(-1..=1).contains(&v) || v != -z[[k, j, i]] {
                        return Err(Error::Domain(format!(
                            "slice {k}: entry ({i},{j}) violates skew-symmetry"
                        )));
                    }
                }
            }
        }
        Ok(Self { z })
    }

    pub(crate) fn from_array_unchecked(z: Array3<i8>) -> Self {
        debug_assert!(Self::from_array(z.clone()).is_ok());
        Self { z }
    }

    pub fn order(&self) -> usize {
        self.z.dim().0
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> i8 {
        self.z[[k, i, j]]
    }

    /// Comparison matrix for reference sensor `k`.
    pub fn slice(&self, k: usize) -> ArrayView2<'_, i8> {
        self.z.index_axis(Axis(0), k)
    }

    pub fn as_array(&self) -> &Array3<i8> {
        &self.z
    }
}

/// Rank-aggregation scores. Column `k` holds the zero-sum proximity vector of
/// every sensor with respect to reference sensor `k`; entry `(i, k)` is `psi_ik`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximityMatrix<T> {
    psi: Array2<T>,
    m: usize,
}

impl<T: Scalar> ProximityMatrix<T> {
    pub fn new(psi: Array2<T>, m: usize) -> Result<Self> {
        if psi.nrows() != psi.ncols() {
            return Err(Error::DimensionMismatch {
                expected: psi.nrows(),
                got: psi.ncols(),
            });
        }
        if m > psi.nrows() {
            return Err(Error::DimensionMismatch {
                expected: psi.nrows(),
                got: m,
            });
        }
        Ok(Self { psi, m })
    }

    pub fn order(&self) -> usize {
        self.psi.nrows()
    }

    pub fn num_anchors(&self) -> usize {
        self.m
    }

    pub fn num_targets(&self) -> usize {
        self.order() - self.m
    }

    pub fn get(&self, i: usize, k: usize) -> T {
        self.psi[[i, k]]
    }

    pub fn column(&self, k: usize) -> ArrayView1<'_, T> {
        self.psi.column(k)
    }

    pub fn as_array(&self) -> ArrayView2<'_, T> {
        self.psi.view()
    }

    /// The stored block. Unlike distances, proximities are not symmetric, so
    /// `XY` is the stored target-row/anchor-column block: entry `(j, k)` scores
    /// target `j` against reference anchor `k`.
    pub fn block_view(&self, which: Block) -> ArrayView2<'_, T> {
        let m = self.m;
        match which {
            Block::Y => self.psi.slice(s![..m, ..m]),
            Block::X => self.psi.slice(s![m.., m..]),
            Block::YX => self.psi.slice(s![..m, m..]),
            Block::XY => self.psi.slice(s![m.., ..m]),
        }
    }

    /// Largest absolute column sum; zero up to rounding for a valid matrix.
    pub fn max_abs_column_sum(&self) -> T {
        self.psi
            .columns()
            .into_iter()
            .map(|c| c.sum().abs())
            .fold(T::zero(), T::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn three_four_five() {
        let f = SensorField::from_points(&[vec![0.0, 0.0], vec![3.0, 4.0]], Some(&[])).unwrap();
        let d = pairwise_distances(&f).unwrap();
        assert_eq!(d.get(0, 1), 5.0);
        assert_eq!(d.get(1, 0), 5.0);
    }

    #[test]
    fn single_sensor_is_zero_matrix() {
        let f = SensorField::<f64>::from_points(&[vec![0.3, 0.7]], Some(&[])).unwrap();
        let d = pairwise_distances(&f).unwrap();
        assert_eq!(d.as_array(), array![[0.0]]);
    }

    #[test]
    fn target_row() {
        let f = SensorField::from_points(
            &[vec![0.0, 0.0], vec![1.0, 0.0]],
            Some(&[vec![0.0, 1.0]]),
        )
        .unwrap();
        let d = pairwise_distances(&f).unwrap();
        let row = d.as_array().row(2).to_vec();
        assert_eq!(row[0], 1.0);
        assert!((row[1] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(row[2], 0.0);
    }

    #[test]
    fn missing_targets_is_error() {
        let f = SensorField::<f64>::from_points(&[vec![0.0, 0.0]], None).unwrap();
        assert_eq!(pairwise_distances(&f), Err(Error::GroundTruthUnavailable));
    }

    #[test]
    fn ragged_points_rejected() {
        let r = SensorField::<f64>::from_points(&[vec![0.0, 0.0], vec![1.0]], None);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn blocks() {
        let f = SensorField::from_points(
            &[vec![0.0, 0.0], vec![1.0, 0.0]],
            Some(&[vec![0.0, 1.0]]),
        )
        .unwrap();
        let d = pairwise_distances(&f).unwrap();
        assert_eq!(d.block_view(Block::Y).dim(), (2, 2));
        assert_eq!(d.block_view(Block::Y), d.as_array().slice(s![..2, ..2]));
        assert_eq!(d.block_view(Block::XY), d.block_view(Block::YX).t());
        assert_eq!(d.block_view(Block::X).dim(), (1, 1));
    }

    #[test]
    fn no_targets_gives_empty_cross_block() {
        let f = SensorField::from_points(&[vec![0.0, 0.0], vec![1.0, 0.0]], Some(&[])).unwrap();
        let d = pairwise_distances(&f).unwrap();
        assert_eq!(d.block_view(Block::YX).dim(), (2, 0));
        assert_eq!(d.block_view(Block::XY).dim(), (0, 2));
    }

    #[test]
    fn tensor_validation() {
        let mut z = Array3::<i8>::zeros((2, 2, 2));
        z[[0, 0, 1]] = 1;
        assert!(ComparisonTensor::from_array(z.clone()).is_err());
        z[[0, 1, 0]] = -1;
        assert!(ComparisonTensor::from_array(z).is_ok());
    }

    #[test]
    fn distance_matrix_validation() {
        assert!(DistanceMatrix::new(array![[0.0, 1.0], [2.0, 0.0]], 2).is_err());
        assert!(DistanceMatrix::new(array![[1.0, 1.0], [1.0, 0.0]], 2).is_err());
        assert!(DistanceMatrix::new(array![[0.0, 1.0], [1.0, 0.0]], 1).is_ok());
    }
}
