//! Minimum enclosing ball, the maximum-likelihood fit under a uniform-ball
//! model.
//!
//! Solved as the dual quadratic program over the probability simplex,
//! `min_w |sum_k w_k y_k|^2 - sum_k w_k |y_k|^2`, with a primal active-set
//! method. The working set holds the support points; on it the problem
//! reduces to finding the circumcenter of the support in its affine hull.
//! Points farthest outside the current ball enter the working set and
//! blocking weights leave it, so the working set stays small (at most
//! `N + 1` points in general position).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::geometry::Hypersphere;

/// Iteration cap for the active-set loop.
pub const MAX_ITERATIONS: usize = 10_000;

/// Relative slack on squared distances before a point counts as outside.
const VIOLATION_TOL: f64 = 1e-10;

fn sq_dist(a: ndarray::ArrayView1<'_, f64>, b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn dot_rows(points: ArrayView2<'_, f64>, k: usize, l: usize, anchor: usize) -> f64 {
    let a = points.row(anchor);
    points
        .row(k)
        .iter()
        .zip(points.row(l).iter())
        .zip(a.iter())
        .map(|((x, y), z)| (x - z) * (y - z))
        .sum()
}

fn weighted_center(points: ArrayView2<'_, f64>, support: &[usize], weights: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; points.ncols()];
    for (&k, &w) in support.iter().zip(weights) {
        for (acc, x) in c.iter_mut().zip(points.row(k).iter()) {
            *acc += w * x;
        }
    }
    c
}

enum Step {
    /// Minimizer of the equality-constrained subproblem (weights sum to 1).
    Target(Vec<f64>),
    /// Direction of unbounded descent (weights sum to 0).
    Ray(Vec<f64>),
}

/// Solves the subproblem on `support` with `support[0]` as anchor. Returns
/// weights for all support points.
fn subproblem(points: ArrayView2<'_, f64>, support: &[usize]) -> Step {
    let k = support.len() - 1;
    if k == 0 {
        return Step::Target(vec![1.0]);
    }
    let anchor = support[0];
    let mut h = DMatrix::<f64>::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let v = dot_rows(points, support[a + 1], support[b + 1], anchor);
            h[(a, b)] = v;
            h[(b, a)] = v;
        }
    }
    let rhs = DVector::from_iterator(k, (0..k).map(|a| 0.5 * h[(a, a)]));

    let u = if let Some(chol) = h.clone().cholesky() {
        let u = chol.solve(&rhs);
        let resid = (&h * &u - &rhs).norm();
        (resid <= 1e-9 * rhs.norm().max(f64::MIN_POSITIVE) && u.iter().all(|x| x.is_finite()))
            .then_some(u)
    } else {
        None
    };
    let u = match u {
        Some(u) => u,
        None => {
            let eig = SymmetricEigen::new(h);
            let max_ev = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let cutoff = 1e-12 * k as f64 * max_ev.max(f64::MIN_POSITIVE);
            let mut u = DVector::<f64>::zeros(k);
            let mut ray = DVector::<f64>::zeros(k);
            let mut singular = false;
            for (i, &ev) in eig.eigenvalues.iter().enumerate() {
                let v = eig.eigenvectors.column(i);
                let proj = v.dot(&rhs);
                if ev.abs() > cutoff {
                    u += v * (proj / ev);
                } else if proj.abs() > 1e-9 * rhs.norm() {
                    // objective decreases without bound along v (sign chosen
                    // so that rhs . v > 0)
                    ray += v * proj.signum();
                    singular = true;
                }
            }
            if singular {
                let mut w = Vec::with_capacity(k + 1);
                w.push(-ray.sum());
                w.extend(ray.iter());
                return Step::Ray(w);
            }
            u
        }
    };
    let mut w = Vec::with_capacity(k + 1);
    w.push(1.0 - u.sum());
    w.extend(u.iter());
    Step::Target(w)
}

/// Result of the active-set iteration before the containment fix-up.
struct Solve {
    center: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn solve(points: ArrayView2<'_, f64>) -> Solve {
    let p = points.nrows();
    // start from the point farthest from the first one
    let first = points.row(0).to_vec();
    let start = (0..p)
        .max_by(|&a, &b| sq_dist(points.row(a), &first).total_cmp(&sq_dist(points.row(b), &first)))
        .unwrap_or(0);
    let mut support = vec![start];
    let mut weights = vec![1.0];
    let mut center = points.row(start).to_vec();

    for iter in 0..MAX_ITERATIONS {
        match subproblem(points, &support) {
            Step::Target(target) => {
                let dir: Vec<f64> = target.iter().zip(&weights).map(|(t, w)| t - w).collect();
                let (alpha, blocking) = ratio_test(&weights, &dir, 1.0);
                if let Some(b) = blocking {
                    take_step(&mut weights, &dir, alpha);
                    support.remove(b);
                    weights.remove(b);
                    center = weighted_center(points, &support, &weights);
                    continue;
                }
                weights = target;
                center = weighted_center(points, &support, &weights);
                let r2 = sq_dist(points.row(support[0]), &center);
                let (far, far_d2) = (0..p)
                    .map(|k| (k, sq_dist(points.row(k), &center)))
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("nonempty");
                if far_d2 > r2 * (1.0 + VIOLATION_TOL) && far_d2 > 0.0 && !support.contains(&far) {
                    support.push(far);
                    weights.push(0.0);
                } else {
                    return Solve { center, iterations: iter + 1, converged: true };
                }
            }
            Step::Ray(dir) => {
                let (alpha, blocking) = ratio_test(&weights, &dir, f64::INFINITY);
                take_step(&mut weights, &dir, alpha);
                if let Some(b) = blocking {
                    support.remove(b);
                    weights.remove(b);
                }
                center = weighted_center(points, &support, &weights);
            }
        }
    }
    Solve { center, iterations: MAX_ITERATIONS, converged: false }
}

/// Largest step in `[0, cap]` keeping all weights nonnegative, and the index
/// of the first weight to hit zero if the step is blocked.
fn ratio_test(weights: &[f64], dir: &[f64], cap: f64) -> (f64, Option<usize>) {
    let mut alpha = cap;
    let mut blocking = None;
    for (i, (&w, &d)) in weights.iter().zip(dir).enumerate() {
        if d < 0.0 {
            let a = (w / -d).max(0.0);
            if a < alpha {
                alpha = a;
                blocking = Some(i);
            }
        }
    }
    (alpha, blocking)
}

fn take_step(weights: &mut [f64], dir: &[f64], alpha: f64) {
    for (w, d) in weights.iter_mut().zip(dir) {
        *w = (*w + alpha * d).max(0.0);
    }
}

/// Minimum enclosing ball of the rows of `points`.
///
/// The returned radius is the largest distance from the returned center, so
/// the ball always contains every point. If the iteration cap is reached the
/// best enclosing ball found is carried in [`Error::MebNotConverged`].
pub fn fit_ml_ball(points: ArrayView2<'_, f64>) -> Result<Hypersphere> {
    if points.nrows() == 0 {
        return Err(Error::Empty("point set"));
    }
    if points.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("points"));
    }
    let s = solve(points);
    let radius = points
        .outer_iter()
        .map(|row| sq_dist(row, &s.center))
        .fold(0.0, f64::max)
        .sqrt();
    let ball = Hypersphere { center: s.center, radius };
    if s.converged {
        Ok(ball)
    } else {
        Err(Error::MebNotConverged { iterations: s.iterations, best: ball })
    }
}
