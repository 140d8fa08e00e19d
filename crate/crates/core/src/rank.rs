//! Least-squares (HodgeRank) rank aggregation.
//!
//! Each comparison slice is flattened over the edge list of the complete graph
//! and turned into a zero-sum score vector `psi` minimizing `||B psi - z||`.
//! On the complete graph `B^T B = N I - 1 1^T`, whose pseudoinverse acts as
//! `1/N` on zero-sum vectors, so the solution is `B^T z / N` exactly.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ComparisonTensor, ProximityMatrix};
use crate::scalar::Scalar;

/// Edge list `(i, j)`, `i < j`, in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairEnumeration {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairEnumeration {
    pub fn num_items(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
}

/// All `N(N-1)/2` unordered pairs, zero-based.
pub fn enumerate_pairs(n: usize) -> Result<PairEnumeration> {
    if n < 2 {
        return Err(Error::EmptyEnumeration(n));
    }
    let pairs = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    Ok(PairEnumeration { n, pairs })
}

/// Edge-node incidence matrix, stored as its edge list. Row `l` has `+1` at
/// column `i_l` and `-1` at column `j_l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    n: usize,
    edges: Vec<(usize, usize)>,
    complete: bool,
}

pub fn incidence_matrix(e: &PairEnumeration) -> IncidenceMatrix {
    IncidenceMatrix {
        n: e.n,
        edges: e.pairs.clone(),
        complete: true,
    }
}

impl IncidenceMatrix {
    /// Incidence matrix of an arbitrary (possibly incomplete) comparison graph.
    pub fn from_edges(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        for &(i, j) in &edges {
            if i >= n || j >= n || i == j {
                return Err(Error::Domain(format!("invalid edge ({i},{j}) for {n} nodes")));
            }
        }
        let mut canonical: Vec<_> = edges.iter().map(|&(i, j)| (i.min(j), i.max(j))).collect();
        canonical.sort_unstable();
        canonical.dedup();
        let complete = canonical.len() == edges.len() && canonical.len() == n * (n - 1) / 2;
        Ok(Self { n, edges, complete })
    }

    pub fn rows(&self) -> usize {
        self.edges.len()
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn is_complete_graph(&self) -> bool {
        self.complete
    }

    pub fn to_dense<T: Scalar>(&self) -> Array2<T> {
        let mut b = Array2::zeros((self.edges.len(), self.n));
        for (l, &(i, j)) in self.edges.iter().enumerate() {
            b[[l, i]] = T::one();
            b[[l, j]] = -T::one();
        }
        b
    }

    /// `B^T z`.
    pub fn transpose_mul<T: Scalar>(&self, z: ArrayView1<'_, T>) -> Array1<T> {
        let mut out = Array1::zeros(self.n);
        for (&(i, j), &v) in self.edges.iter().zip(z.iter()) {
            out[i] += v;
            out[j] -= v;
        }
        out
    }

    /// `B^T B x`, the graph Laplacian applied to `x`.
    pub fn laplacian_mul<T: Scalar>(&self, x: ArrayView1<'_, T>) -> Array1<T> {
        let mut out = Array1::zeros(self.n);
        for &(i, j) in &self.edges {
            let d = x[i] - x[j];
            out[i] += d;
            out[j] -= d;
        }
        out
    }
}

/// `z_l = Z[i_l, j_l]`.
pub fn flatten_slice<T: Scalar>(slice: ArrayView2<'_, i8>, e: &PairEnumeration) -> Result<Array1<T>> {
    if slice.dim() != (e.n, e.n) {
        return Err(Error::DimensionMismatch {
            expected: e.n,
            got: slice.nrows(),
        });
    }
    Ok(e.pairs
        .iter()
        .map(|&(i, j)| T::from_i8(slice[[i, j]]).expect("comparison fits"))
        .collect())
}

/// Inverse of [`flatten_slice`] using skew-symmetry.
pub fn unflatten_slice(z: &[i8], e: &PairEnumeration) -> Result<Array2<i8>> {
    if z.len() != e.len() {
        return Err(Error::DimensionMismatch {
            expected: e.len(),
            got: z.len(),
        });
    }
    let mut out = Array2::zeros((e.n, e.n));
    for (&(i, j), &v) in e.pairs.iter().zip(z) {
        out[[i, j]] = v;
        out[[j, i]] = -v;
    }
    Ok(out)
}

/// Zero-sum least-squares scores `argmin ||B psi - z||` subject to `1^T psi = 0`.
///
/// The complete graph uses the closed form `B^T z / N`. Any other graph goes
/// through conjugate gradients on the Laplacian started from zero, which
/// converges to the minimum-norm (pseudoinverse) solution.
pub fn ls_rank<T: Scalar>(z: ArrayView1<'_, T>, b: &IncidenceMatrix) -> Result<Array1<T>> {
    if z.len() != b.rows() {
        return Err(Error::DimensionMismatch {
            expected: b.rows(),
            got: z.len(),
        });
    }
    let rhs = b.transpose_mul(z);
    if b.is_complete_graph() {
        return Ok(rhs / T::from_count(b.n));
    }
    Ok(laplacian_pinv_solve(b, rhs))
}

fn laplacian_pinv_solve<T: Scalar>(b: &IncidenceMatrix, rhs: Array1<T>) -> Array1<T> {
    let n = b.n;
    let mut x = Array1::<T>::zeros(n);
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut rr = r.dot(&r);
    let stop = rr * T::epsilon() * T::epsilon();
    for _ in 0..(4 * n + 10) {
        if rr <= stop || rr == T::zero() {
            break;
        }
        let lp = b.laplacian_mul(p.view());
        let curvature = p.dot(&lp);
        if curvature <= T::zero() {
            break;
        }
        let alpha = rr / curvature;
        x.scaled_add(alpha, &p);
        r.scaled_add(-alpha, &lp);
        let rr_next = r.dot(&r);
        p = &r + &(p * (rr_next / rr));
        rr = rr_next;
    }
    let mean = x.sum() / T::from_count(n);
    x.mapv_inplace(|v| v - mean);
    x
}

/// Column `k` of the result is the rank-aggregated proximity vector of slice `k`.
pub fn aggregate_proximities<T: Scalar>(z: &ComparisonTensor, m: usize) -> Result<ProximityMatrix<T>> {
    let n = z.order();
    let e = enumerate_pairs(n)?;
    let b = incidence_matrix(&e);
    let columns: Vec<Array1<T>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let zk = flatten_slice::<T>(z.slice(k), &e)?;
            ls_rank(zk.view(), &b)
        })
        .collect::<Result<_>>()?;
    let mut psi = Array2::zeros((n, n));
    for (k, c) in columns.into_iter().enumerate() {
        psi.column_mut(k).assign(&c);
    }
    ProximityMatrix::new(psi, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn pairs_small() {
        let e = enumerate_pairs(3).unwrap();
        assert_eq!(e.pairs(), &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(enumerate_pairs(2).unwrap().pairs(), &[(0, 1)]);
        assert_eq!(enumerate_pairs(5).unwrap().len(), 10);
        assert_eq!(enumerate_pairs(1), Err(Error::EmptyEnumeration(1)));
    }

    #[test]
    fn incidence_three() {
        let b: Array2<f64> = incidence_matrix(&enumerate_pairs(3).unwrap()).to_dense();
        assert_eq!(b, array![[1.0, -1.0, 0.0], [1.0, 0.0, -1.0], [0.0, 1.0, -1.0]]);
    }

    #[test]
    fn incidence_rows_sum_to_zero() {
        for n in 2..12 {
            let b: Array2<f64> = incidence_matrix(&enumerate_pairs(n).unwrap()).to_dense();
            assert!(b.sum_axis(ndarray::Axis(1)).iter().all(|&s| s == 0.0));
        }
    }

    #[test]
    fn gram_is_complete_laplacian() {
        for n in 2..=10 {
            let b: Array2<f64> = incidence_matrix(&enumerate_pairs(n).unwrap()).to_dense();
            let btb = b.t().dot(&b);
            let expected = Array2::from_shape_fn((n, n), |(i, j)| {
                if i == j {
                    n as f64 - 1.0
                } else {
                    -1.0
                }
            });
            assert_eq!(btb, expected);
        }
    }

    #[test]
    fn flatten_examples() {
        let e = enumerate_pairs(3).unwrap();
        let slice = array![[0i8, -1, -1], [1, 0, 1], [1, -1, 0]];
        let z: Array1<f64> = flatten_slice(slice.view(), &e).unwrap();
        assert_eq!(z, array![-1.0, -1.0, 1.0]);
        let back = unflatten_slice(&[-1, -1, 1], &e).unwrap();
        assert_eq!(back, slice);
        let zero: Array1<f64> = flatten_slice(Array2::<i8>::zeros((3, 3)).view(), &e).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ls_rank_three() {
        let b = incidence_matrix(&enumerate_pairs(3).unwrap());
        let psi = ls_rank(array![-1.0_f64, -1.0, -1.0].view(), &b).unwrap();
        let expected = [-2.0 / 3.0, 0.0, 2.0 / 3.0];
        for (a, e) in psi.iter().zip(expected) {
            assert!((a - e).abs() < 1e-15);
        }
        let zero = ls_rank(Array1::<f64>::zeros(3).view(), &b).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn borda_four() {
        // distances (1,2,3,4) to the reference: z_ij = sgn(d_i - d_j)
        let e = enumerate_pairs(4).unwrap();
        let d = [1.0, 2.0, 3.0, 4.0];
        let z: Array1<f64> = e.pairs().iter().map(|&(i, j)| f64::signum(d[i] - d[j])).collect();
        let psi = ls_rank(z.view(), &incidence_matrix(&e)).unwrap();
        assert_eq!(psi, array![-0.75, -0.25, 0.25, 0.75]);
    }

    #[test]
    fn general_route_on_complete_graph_agrees() {
        let e = enumerate_pairs(6).unwrap();
        let complete = incidence_matrix(&e);
        let general = IncidenceMatrix::from_edges(6, e.pairs().iter().rev().copied().collect()).unwrap();
        assert!(general.is_complete_graph());
        let forced = IncidenceMatrix {
            complete: false,
            ..complete.clone()
        };
        let z: Array1<f64> = (0..e.len()).map(|l| [1.0, -1.0, 0.0][l % 3]).collect();
        let a = ls_rank(z.view(), &complete).unwrap();
        let b = ls_rank(z.view(), &forced).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn disconnected_graph_is_zero_sum() {
        // two components {0,1} and {2,3}
        let b = IncidenceMatrix::from_edges(4, vec![(0, 1), (2, 3)]).unwrap();
        let psi = ls_rank(array![1.0_f64, -1.0].view(), &b).unwrap();
        assert!(psi.sum().abs() < 1e-14);
        assert!((psi[0] - psi[1] - 1.0).abs() < 1e-12);
        assert!((psi[2] - psi[3] + 1.0).abs() < 1e-12);
    }
}
