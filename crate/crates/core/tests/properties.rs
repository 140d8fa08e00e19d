use nalgebra::DMatrix;
use ndarray::{array, Array1, Array2, Axis};
use proptest::prelude::*;
use rand::Rng;

use ordinal_unloc::funclearn::{estimate_distances, fit_linear_map};
use ordinal_unloc::model::{pairwise_distances, Block};
use ordinal_unloc::ordinal::{tensor_from_distances, tensor_from_signals};
use ordinal_unloc::rank::{aggregate_proximities, enumerate_pairs, incidence_matrix, ls_rank, IncidenceMatrix};
use ordinal_unloc::signals::{mw_to_dbm, rss_signal_matrix, sample_link_exponents, PathLossExponent, RssModel};
use ordinal_unloc::unfold::{starting_points, unfolding_cost, unfolding_gradient, unloc_localize};
use ordinal_unloc::{
    ordinal_unloc, rng, ComparisonNoiseModel, Orientation, SensorField, SignalMatrix, SolverOptions,
    UnfoldingProblem,
};

fn random_points(n: usize, q: usize, side: f64, seed: u64) -> Array2<f64> {
    let mut r = rng::stream(&[seed]);
    Array2::from_shape_fn((n, q), |_| side * r.random::<f64>())
}

fn field(m: usize, n: usize, seed: u64) -> SensorField<f64> {
    let pts = random_points(m + n, 2, 1.0, seed);
    SensorField::new(
        pts.slice(ndarray::s![..m, ..]).to_owned(),
        Some(pts.slice(ndarray::s![m.., ..]).to_owned()),
    )
    .unwrap()
}

/// `B^+ z` with `B^+ = (B^T B)^+ B^T`, the Gram pseudoinverse taken from a
/// symmetric eigendecomposition whose reconstruction is checked first.
fn pinv_solution(b: &IncidenceMatrix, z: &Array1<f64>) -> Vec<f64> {
    let dense = b.to_dense::<f64>();
    let mat = DMatrix::from_fn(dense.nrows(), dense.ncols(), |r, c| dense[[r, c]]);
    let gram = mat.transpose() * &mat;
    let eig = gram.clone().symmetric_eigen();
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues) * eig.eigenvectors.transpose();
    assert!((rebuilt - &gram).abs().max() < 1e-10, "oracle factorization failed");
    let inv = eig.eigenvalues.map(|l| if l > 1e-9 { 1.0 / l } else { 0.0 });
    let gram_pinv = &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose();
    let zv = nalgebra::DVector::from_iterator(z.len(), z.iter().copied());
    (gram_pinv * mat.transpose() * zv).iter().copied().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distances_are_a_metric(seed in any::<u64>(), m in 2usize..8, n in 0usize..4) {
        let d = pairwise_distances(&field(m, n, seed)).unwrap();
        let a = d.as_array();
        let size = m + n;
        for i in 0..size {
            prop_assert_eq!(a[[i, i]], 0.0);
            for j in 0..size {
                prop_assert_eq!(a[[i, j]], a[[j, i]]);
                for k in 0..size {
                    prop_assert!(a[[i, j]] <= a[[i, k]] + a[[k, j]] + 1e-12);
                }
            }
        }
    }

    #[test]
    fn blocks_reassemble(seed in any::<u64>(), m in 2usize..6, n in 1usize..4) {
        let d = pairwise_distances(&field(m, n, seed)).unwrap();
        let a = d.as_array();
        prop_assert_eq!(d.block_view(Block::Y), a.slice(ndarray::s![..m, ..m]));
        prop_assert_eq!(d.block_view(Block::X), a.slice(ndarray::s![m.., m..]));
        prop_assert_eq!(d.block_view(Block::YX), a.slice(ndarray::s![..m, m..]));
        let yx = d.block_view(Block::YX);
        prop_assert_eq!(d.block_view(Block::XY), yx.t());
    }

    #[test]
    fn noisy_slices_are_skew_symmetric(seed in any::<u64>(), sigma in 0.0f64..1.0) {
        let d = pairwise_distances(&field(6, 2, seed)).unwrap();
        let z = tensor_from_distances(&d, &ComparisonNoiseModel::new(sigma, seed).unwrap());
        for k in 0..8 {
            let s = z.slice(k);
            prop_assert_eq!(s.to_owned(), s.t().mapv(|v| -v));
        }
    }

    #[test]
    fn noiseless_tensor_matches_distance_order(seed in any::<u64>()) {
        let d = pairwise_distances(&field(5, 2, seed)).unwrap();
        let z = tensor_from_distances(&d, &ComparisonNoiseModel::noiseless());
        for k in 0..7 {
            for i in 0..7 {
                for j in 0..7 {
                    let want = (d.get(i, k) - d.get(j, k)).signum() as i8;
                    let want = if i == j { 0 } else { want };
                    prop_assert_eq!(z.get(k, i, j), want);
                }
            }
        }
    }

    #[test]
    fn monotone_proxies_give_the_noiseless_tensor(seed in any::<u64>(), g in 1.0f64..6.0) {
        let d = pairwise_distances(&field(6, 2, seed)).unwrap();
        let reference = tensor_from_distances(&d, &ComparisonNoiseModel::noiseless());
        let increasing = SignalMatrix::complete(d.as_array().mapv(|v| v.powf(g) + 3.0), Orientation::IncreasingWithDistance).unwrap();
        prop_assert_eq!(tensor_from_signals(&increasing).0, reference.clone());
        let decreasing = SignalMatrix::complete(d.as_array().mapv(|v| (-g * v).exp()), Orientation::DecreasingWithDistance).unwrap();
        prop_assert_eq!(tensor_from_signals(&decreasing).0, reference);
    }

    #[test]
    fn dbm_and_mw_give_the_same_tensor(seed in any::<u64>()) {
        let d = pairwise_distances(&field(5, 3, seed)).unwrap();
        let mut r = rng::stream(&[seed, 1]);
        let g = sample_link_exponents(8, &PathLossExponent::Uniform { a: 2.0, b: 6.0 }, &mut r);
        let mw = rss_signal_matrix(&d, &RssModel::default(), &g).unwrap();
        let dbm = SignalMatrix::complete(mw.values().mapv(mw_to_dbm), Orientation::DecreasingWithDistance).unwrap();
        prop_assert_eq!(tensor_from_signals(&mw).0, tensor_from_signals(&dbm).0);
    }

    #[test]
    fn rank_matches_pseudoinverse(seed in any::<u64>(), n in 2usize..16) {
        let e = enumerate_pairs(n).unwrap();
        let b = incidence_matrix(&e);
        let mut r = rng::stream(&[seed]);
        let z: Array1<f64> = (0..e.len()).map(|_| [-1.0, 0.0, 1.0][r.random_range(0..3)]).collect();
        let psi = ls_rank(z.view(), &b).unwrap();
        for (a, o) in psi.iter().zip(pinv_solution(&b, &z)) {
            prop_assert!((a - o).abs() < 1e-10);
        }
        prop_assert!(psi.sum().abs() < 1e-12);
    }

    #[test]
    fn sparse_rank_matches_pseudoinverse(seed in any::<u64>(), n in 3usize..12) {
        let mut r = rng::stream(&[seed]);
        let edges: Vec<(usize, usize)> = enumerate_pairs(n).unwrap().pairs().iter().copied().filter(|_| r.random::<f64>() < 0.5).collect();
        prop_assume!(!edges.is_empty());
        let b = IncidenceMatrix::from_edges(n, edges).unwrap();
        let z: Array1<f64> = (0..b.rows()).map(|_| r.random_range(-1.0..1.0)).collect();
        let psi = ls_rank(z.view(), &b).unwrap();
        for (a, o) in psi.iter().zip(pinv_solution(&b, &z)) {
            prop_assert!((a - o).abs() < 1e-9, "{} vs {}", a, o);
        }
    }

    #[test]
    fn recalibration_preserves_proximity_order(seed in any::<u64>(), sigma in 0.0f64..0.5) {
        let f = field(8, 3, seed);
        let d = pairwise_distances(&f).unwrap();
        let z = tensor_from_distances(&d, &ComparisonNoiseModel::new(sigma, seed).unwrap());
        let psi = aggregate_proximities::<f64>(&z, 8).unwrap();
        let d_hat = estimate_distances(&psi, d.block_view(Block::Y)).unwrap();
        let psi_yx = psi.block_view(Block::YX);
        for j in 0..3 {
            let col = d_hat.target_column(j);
            let map = d_hat.maps()[j];
            prop_assert!(map.c1 > 0.0);
            for i in 0..8 {
                prop_assert!((col[i] - map.apply(psi_yx[[i, j]])).abs() < 1e-12);
                for k in 0..8 {
                    if psi_yx[[i, j]] < psi_yx[[k, j]] {
                        prop_assert!(col[i] < col[k]);
                    }
                }
            }
        }
    }

    #[test]
    fn affine_fit_recovers_exact_lines(c0 in -5.0f64..5.0, c1 in 0.01f64..10.0, seed in any::<u64>()) {
        let mut r = rng::stream(&[seed]);
        let psi: Array1<f64> = (0..10).map(|_| r.random_range(-1.0..1.0)).collect();
        let d = psi.mapv(|p| c0 + c1 * p);
        let fit = fit_linear_map(psi.view(), d.view()).unwrap();
        prop_assert!((fit.map.c0 - c0).abs() < 1e-9);
        prop_assert!((fit.map.c1 - c1).abs() < 1e-9 * c1.max(1.0));
    }

    #[test]
    fn more_restarts_never_hurt(seed in any::<u64>()) {
        let y = random_points(5, 2, 1.0, seed);
        let mut r = rng::stream(&[seed, 7]);
        let delta: Array1<f64> = (0..5).map(|_| r.random_range(0.0..1.0)).collect();
        let p = UnfoldingProblem::new(y, delta).unwrap();
        let cost = |restarts| unloc_localize(&p, &SolverOptions { restarts, seed, ..Default::default() }).unwrap().cost;
        let (c1, c4, c8) = (cost(1), cost(4), cost(8));
        prop_assert!(c4 <= c1 && c8 <= c4);
    }

    #[test]
    fn gradient_matches_central_differences(seed in any::<u64>()) {
        let y = random_points(6, 2, 1.0, seed);
        let mut r = rng::stream(&[seed, 3]);
        let delta: Array1<f64> = (0..6).map(|_| r.random_range(0.0..2.0)).collect();
        let x: Array1<f64> = (0..2).map(|_| r.random_range(-0.5..1.5)).collect();
        let g = unfolding_gradient(x.view(), y.view(), delta.view());
        let h = 1e-6;
        for c in 0..2 {
            let mut xp = x.clone();
            xp[c] += h;
            let mut xm = x.clone();
            xm[c] -= h;
            let fd = (unfolding_cost(xp.view(), y.view(), delta.view()) - unfolding_cost(xm.view(), y.view(), delta.view())) / (2.0 * h);
            prop_assert!((fd - g[c]).abs() <= 1e-5 * g[c].abs().max(1.0));
        }
    }

    #[test]
    fn pipeline_is_scale_equivariant(seed in any::<u64>(), s in 0.1f64..50.0) {
        let f = field(10, 2, seed);
        let d = pairwise_distances(&f).unwrap();
        let z = tensor_from_distances(&d, &ComparisonNoiseModel::noiseless());
        let opts = SolverOptions::default();
        let base = ordinal_unloc(f.anchors(), &z, &opts).unwrap().positions();
        let scaled_anchors = f.anchors().mapv(|v| v * s);
        let scaled = ordinal_unloc(scaled_anchors.view(), &z, &opts).unwrap().positions();
        for (a, b) in base.iter().zip(&scaled) {
            let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
            for c in 0..2 {
                prop_assert!((a[c] * s - b[c]).abs() < 1e-6 * s);
            }
        }
    }
}

#[test]
fn laplacian_identity_up_to_fifty() {
    for n in 2..=50 {
        let b = incidence_matrix(&enumerate_pairs(n).unwrap()).to_dense::<f64>();
        let l = b.t().dot(&b);
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { n as f64 - 1.0 } else { -1.0 };
                assert_eq!(l[[i, j]], want, "n={n} ({i},{j})");
            }
        }
    }
}

#[test]
fn restart_prefix_is_shared() {
    let y = array![[0.0, 0.0], [2.0, 0.0], [1.0, 3.0]];
    let few = starting_points(y.view(), 3, 11);
    let many = starting_points(y.view(), 9, 11);
    assert_eq!(few[..], many[..3]);
    assert_eq!(few[0], y.mean_axis(Axis(0)).unwrap());
}

#[test]
fn rigid_motion_moves_the_estimate() {
    let (sin, cos) = 0.7f64.sin_cos();
    let shift = [3.0, -1.5];
    for seed in 0..30 {
        let f = field(10, 1, seed);
        let d = pairwise_distances(&f).unwrap();
        let z = tensor_from_distances(&d, &ComparisonNoiseModel::new(0.1, seed).unwrap());
        let opts = SolverOptions::default();
        let base = ordinal_unloc(f.anchors(), &z, &opts).unwrap();
        let moved_anchors = f.anchors().map_axis(Axis(1), |p| [cos * p[0] - sin * p[1] + shift[0], sin * p[0] + cos * p[1] + shift[1]]);
        let moved_anchors = Array2::from_shape_fn((10, 2), |(i, c)| moved_anchors[i][c]);
        let moved = ordinal_unloc(moved_anchors.view(), &z, &opts).unwrap();
        let a = base.positions()[0].clone().unwrap();
        let b = moved.positions()[0].clone().unwrap();
        let expect = [cos * a[0] - sin * a[1] + shift[0], sin * a[0] + cos * a[1] + shift[1]];
        assert!((b[0] - expect[0]).abs() < 1e-6 && (b[1] - expect[1]).abs() < 1e-6, "seed {seed}: {b} vs {expect:?}");
    }
}

#[test]
fn noiseless_zero_residual_recovery() {
    for seed in 0..50 {
        let y = random_points(4, 2, 1.0, seed);
        let x = random_points(1, 2, 1.0, seed + 1000).row(0).to_owned();
        let delta = y.map_axis(Axis(1), |a| (&a - &x).mapv(|v| v * v).sum());
        let r = unloc_localize(&UnfoldingProblem::new(y, delta).unwrap(), &SolverOptions::default()).unwrap();
        assert!((&r.position - &x).mapv(f64::abs).iter().all(|&e| e < 1e-6), "seed {seed}");
    }
}

#[test]
fn single_precision_pipeline_tracks_double() {
    let f = field(12, 3, 5);
    let d = pairwise_distances(&f).unwrap();
    let z = tensor_from_distances(&d, &ComparisonNoiseModel::new(0.1, 5).unwrap());
    let out64 = ordinal_unloc(f.anchors(), &z, &SolverOptions::<f64>::default()).unwrap();
    let anchors32 = f.anchors().mapv(|v| v as f32);
    let out32 = ordinal_unloc(anchors32.view(), &z, &SolverOptions::<f32>::default()).unwrap();
    for (a, b) in out64.positions().iter().zip(out32.positions()) {
        let (a, b) = (a.as_ref().unwrap(), b.unwrap());
        for c in 0..2 {
            assert!((a[c] - b[c] as f64).abs() < 1e-3);
        }
    }
}

#[test]
fn benchmark_is_thread_count_independent() {
    use ordinal_unloc::bench::{run_benchmark, ExperimentConfig, ExperimentKind};
    let run = |threads, kind| {
        let mut c = ExperimentConfig::default_for(kind);
        c.trials = 40;
        c.seed = 99;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_benchmark(&c).unwrap())
    };
    for kind in [ExperimentKind::OrdinalNoise, ExperimentKind::Rss, ExperimentKind::Toa] {
        assert_eq!(run(1, kind), run(4, kind));
    }
}
