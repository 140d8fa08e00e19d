//! Unfolding localization: place a point so that its squared distances to the
//! anchors match a vector of targets `delta`,
//!
//! ```text
//! J(x) = sum_i (||x - y_i||^2 - delta_i)^2
//! ```
//!
//! `J` is a quartic in `x` with possible spurious local minima, so it is solved
//! by damped Newton descent with an Armijo line search from several starts.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funclearn::EstimatedDistanceMatrix;
use crate::rng;
use crate::scalar::Scalar;

/// How estimated distances become the `delta` targets of the cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DeltaMode {
    /// `delta_i = d_i^2`; zero cost at the true position for exact data
    #[default]
    Squared,
    /// `delta_i = d_i`, taken literally
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions<T> {
    pub restarts: usize,
    pub max_iterations: usize,
    /// stop when `||grad J|| <= gradient_tolerance * (1 + |J|)`
    pub gradient_tolerance: T,
    /// Armijo sufficient-decrease constant
    pub armijo: T,
    pub backtrack: T,
    pub max_backtracks: usize,
    pub seed: u64,
    pub delta_mode: DeltaMode,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iterations: 500,
            gradient_tolerance: T::lit(1e-9),
            armijo: T::lit(1e-4),
            backtrack: T::lit(0.5),
            max_backtracks: 60,
            seed: 0,
            delta_mode: DeltaMode::Squared,
        }
    }
}

impl<T: Scalar> SolverOptions<T> {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be >= 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max iterations must be >= 1".into()));
        }
        if !(self.gradient_tolerance > T::zero()) {
            return Err(Error::Config("gradient tolerance must be > 0".into()));
        }
        if !(self.armijo > T::zero() && self.armijo < T::one()) {
            return Err(Error::Config("armijo constant must lie in (0,1)".into()));
        }
        if !(self.backtrack > T::zero() && self.backtrack < T::one()) {
            return Err(Error::Config("backtrack factor must lie in (0,1)".into()));
        }
        Ok(())
    }
}

/// Anchors (rows of an `m x q` matrix) and squared-distance targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnfoldingProblem<T> {
    anchors: Array2<T>,
    delta: Array1<T>,
}

impl<T: Scalar> UnfoldingProblem<T> {
    /// Negative `delta` entries are accepted.
    pub fn new(anchors: Array2<T>, delta: Array1<T>) -> Result<Self> {
        if anchors.nrows() == 0 {
            return Err(Error::EmptyProblem("no anchors"));
        }
        if delta.len() != anchors.nrows() {
            return Err(Error::DimensionMismatch {
                expected: anchors.nrows(),
                got: delta.len(),
            });
        }
        if delta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("unfolding targets"));
        }
        if anchors.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("anchor coordinates"));
        }
        Ok(Self { anchors, delta })
    }

    pub fn anchors(&self) -> ArrayView2<'_, T> {
        self.anchors.view()
    }

    pub fn delta(&self) -> ArrayView1<'_, T> {
        self.delta.view()
    }

    pub fn dimension(&self) -> usize {
        self.anchors.ncols()
    }

    pub fn cost(&self, x: ArrayView1<'_, T>) -> T {
        unfolding_cost(x, self.anchors.view(), self.delta.view())
    }
}

/// `sum_i (||x - y_i||^2 - delta_i)^2`. Anchors are rows of `y`.
pub fn unfolding_cost<T: Scalar>(x: ArrayView1<'_, T>, y: ArrayView2<'_, T>, delta: ArrayView1<'_, T>) -> T {
    y.rows()
        .into_iter()
        .zip(delta.iter())
        .map(|(yi, &di)| {
            let r = sq_dist(x, yi) - di;
            r * r
        })
        .sum()
}

/// `sum_i 4 (||x - y_i||^2 - delta_i) (x - y_i)`.
pub fn unfolding_gradient<T: Scalar>(
    x: ArrayView1<'_, T>,
    y: ArrayView2<'_, T>,
    delta: ArrayView1<'_, T>,
) -> Array1<T> {
    let mut g = Array1::zeros(x.len());
    let four = T::lit(4.0);
    for (yi, &di) in y.rows().into_iter().zip(delta.iter()) {
        let r = sq_dist(x, yi) - di;
        for (gc, (&xc, &yc)) in g.iter_mut().zip(x.iter().zip(yi.iter())) {
            *gc += four * r * (xc - yc);
        }
    }
    g
}

fn sq_dist<T: Scalar>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> T {
    a.iter().zip(b.iter()).map(|(&p, &q)| (p - q) * (p - q)).sum()
}

/// Cost, gradient and Hessian in one pass.
fn evaluate<T: Scalar>(
    x: ArrayView1<'_, T>,
    y: ArrayView2<'_, T>,
    delta: ArrayView1<'_, T>,
) -> (T, Array1<T>, Array2<T>) {
    let q = x.len();
    let mut cost = T::zero();
    let mut g = Array1::zeros(q);
    let mut h = Array2::zeros((q, q));
    let (four, eight) = (T::lit(4.0), T::lit(8.0));
    let mut diff = vec![T::zero(); q];
    for (yi, &di) in y.rows().into_iter().zip(delta.iter()) {
        for (c, dc) in diff.iter_mut().enumerate() {
            *dc = x[c] - yi[c];
        }
        let r = diff.iter().map(|&v| v * v).sum::<T>() - di;
        cost += r * r;
        for a in 0..q {
            g[a] += four * r * diff[a];
            h[[a, a]] += four * r;
            for b in 0..q {
                h[[a, b]] += eight * diff[a] * diff[b];
            }
        }
    }
    (cost, g, h)
}

/// Solves `h p = rhs` for symmetric positive definite `h`; `None` otherwise.
fn cholesky_solve<T: Scalar>(h: &Array2<T>, rhs: &Array1<T>) -> Option<Array1<T>> {
    let q = h.nrows();
    let mut l = Array2::<T>::zeros((q, q));
    for i in 0..q {
        for j in 0..=i {
            let mut s = h[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if !(s > T::zero()) {
                    return None;
                }
                l[[i, i]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    let mut z = rhs.clone();
    for i in 0..q {
        for k in 0..i {
            let v = l[[i, k]] * z[k];
            z[i] -= v;
        }
        z[i] /= l[[i, i]];
    }
    for i in (0..q).rev() {
        for k in (i + 1)..q {
            let v = l[[k, i]] * z[k];
            z[i] -= v;
        }
        z[i] /= l[[i, i]];
    }
    z.iter().all(|v| v.is_finite()).then_some(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// gradient tolerance met
    Converged,
    /// no step along the descent direction decreases the cost at working precision
    Stagnated,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartOutcome<T> {
    pub position: Array1<T>,
    pub cost: T,
    pub iterations: usize,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationResult<T> {
    pub position: Array1<T>,
    pub cost: T,
    pub iterations: usize,
    /// index of the winning start; 0 is the anchor centroid
    pub restart: usize,
    pub termination: Termination,
    /// terminal cost of every start, in start order
    pub restart_costs: Vec<T>,
    /// false when fewer than `q + 1` anchors were available
    pub well_posed: bool,
}

impl<T: Scalar> LocalizationResult<T> {
    pub fn hit_iteration_limit(&self) -> bool {
        self.termination == Termination::MaxIterations
    }
}

fn descend<T: Scalar>(problem: &UnfoldingProblem<T>, start: Array1<T>, opts: &SolverOptions<T>) -> RestartOutcome<T> {
    let (y, delta) = (problem.anchors.view(), problem.delta.view());
    let mut x = start;
    let (mut cost, mut g, mut h) = evaluate(x.view(), y, delta);
    for iter in 0..opts.max_iterations {
        let gnorm = g.dot(&g).sqrt();
        if gnorm <= opts.gradient_tolerance * (T::one() + cost.abs()) {
            return RestartOutcome {
                position: x,
                cost,
                iterations: iter,
                termination: Termination::Converged,
            };
        }
        let neg_g = g.mapv(|v| -v);
        let (dir, mut step) = match cholesky_solve(&h, &neg_g) {
            Some(p) if p.dot(&g) < T::zero() => (p, T::one()),
            _ => {
                // Gershgorin-style bound on the largest Hessian eigenvalue
                let bound = h
                    .rows()
                    .into_iter()
                    .map(|r| r.iter().map(|v| v.abs()).sum::<T>())
                    .fold(T::zero(), T::max);
                let step = if bound > T::zero() { T::one() / bound } else { T::one() };
                (neg_g, step)
            }
        };
        let slope = g.dot(&dir);
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let trial = &x + &(&dir * step);
            let trial_cost = unfolding_cost(trial.view(), y, delta);
            if trial_cost <= cost + opts.armijo * step * slope {
                accepted = Some(trial);
                break;
            }
            step *= opts.backtrack;
        }
        let Some(next) = accepted else {
            return RestartOutcome {
                position: x,
                cost,
                iterations: iter,
                termination: Termination::Stagnated,
            };
        };
        let moved = next
            .iter()
            .zip(x.iter())
            .any(|(a, b)| a != b);
        x = next;
        (cost, g, h) = evaluate(x.view(), y, delta);
        if !moved {
            return RestartOutcome {
                position: x,
                cost,
                iterations: iter + 1,
                termination: Termination::Stagnated,
            };
        }
    }
    let gnorm = g.dot(&g).sqrt();
    let termination = if gnorm <= opts.gradient_tolerance * (T::one() + cost.abs()) {
        Termination::Converged
    } else {
        Termination::MaxIterations
    };
    RestartOutcome {
        position: x,
        cost,
        iterations: opts.max_iterations,
        termination,
    }
}

/// Start points: the anchor centroid, then `restarts - 1` uniform draws in the
/// anchor bounding box. Draw `r` uses the stream `(seed, r)`.
pub fn starting_points<T: Scalar>(anchors: ArrayView2<'_, T>, restarts: usize, seed: u64) -> Vec<Array1<T>> {
    let q = anchors.ncols();
    let centroid = anchors
        .mean_axis(Axis(0))
        .unwrap_or_else(|| Array1::zeros(q));
    let lo: Vec<T> = anchors
        .columns()
        .into_iter()
        .map(|c| c.iter().copied().fold(T::infinity(), T::min))
        .collect();
    let hi: Vec<T> = anchors
        .columns()
        .into_iter()
        .map(|c| c.iter().copied().fold(T::neg_infinity(), T::max))
        .collect();
    let mut starts = Vec::with_capacity(restarts);
    starts.push(centroid);
    for r in 1..restarts {
        let mut rng = rng::stream(&[seed, r as u64]);
        let p: Array1<T> = (0..q)
            .map(|c| {
                let u: f64 = rng.random();
                lo[c] + (hi[c] - lo[c]) * T::lit(u)
            })
            .collect();
        starts.push(p);
    }
    starts
}

/// Multi-start minimization of the unfolding cost.
///
/// Returns the lowest terminal cost over all starts; ties go to the lowest
/// start index.
pub fn unloc_localize<T: Scalar>(problem: &UnfoldingProblem<T>, opts: &SolverOptions<T>) -> Result<LocalizationResult<T>> {
    opts.validate()?;
    let starts = starting_points(problem.anchors.view(), opts.restarts, opts.seed);
    let outcomes: Vec<RestartOutcome<T>> = starts.into_iter().map(|s| descend(problem, s, opts)).collect();
    let mut best = 0;
    for (r, o) in outcomes.iter().enumerate() {
        if o.cost < outcomes[best].cost {
            best = r;
        }
    }
    let restart_costs = outcomes.iter().map(|o| o.cost).collect();
    let win = &outcomes[best];
    if !win.cost.is_finite() {
        return Err(Error::NonFinite("unfolding cost diverged"));
    }
    Ok(LocalizationResult {
        position: win.position.clone(),
        cost: win.cost,
        iterations: win.iterations,
        restart: best,
        termination: win.termination,
        restart_costs,
        well_posed: problem.anchors.nrows() > problem.dimension(),
    })
}

/// Per-target results from [`localize_all`].
#[derive(Debug, Clone, PartialEq)]
pub struct BatchLocalization<T> {
    pub results: Vec<Result<LocalizationResult<T>>>,
    /// negative distance estimates encountered (squared away in `Squared` mode)
    pub negative_estimates: usize,
}

/// Solves one independent problem per target column of `d_hat`.
///
/// Every column uses the same start points, so permuting columns permutes the
/// results. A failing column does not affect the others.
pub fn localize_all<T: Scalar>(
    anchors: ArrayView2<'_, T>,
    d_hat: &EstimatedDistanceMatrix<T>,
    opts: &SolverOptions<T>,
) -> Result<BatchLocalization<T>> {
    opts.validate()?;
    if d_hat.num_anchors() != anchors.nrows() {
        return Err(Error::DimensionMismatch {
            expected: anchors.nrows(),
            got: d_hat.num_anchors(),
        });
    }
    let negative_estimates = d_hat.anchor_to_target().iter().filter(|&&v| v < T::zero()).count();
    if negative_estimates > 0 {
        log::debug!("{negative_estimates} negative distance estimates");
    }
    let results = (0..d_hat.num_targets())
        .into_par_iter()
        .map(|j| {
            let col = d_hat.target_column(j);
            let delta = match opts.delta_mode {
                DeltaMode::Squared => col.mapv(|d| d * d),
                DeltaMode::Raw => col.to_owned(),
            };
            let problem = UnfoldingProblem::new(anchors.to_owned(), delta)?;
            unloc_localize(&problem, opts)
        })
        .collect();
    Ok(BatchLocalization {
        results,
        negative_estimates,
    })
}
