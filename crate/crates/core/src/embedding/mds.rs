//! Metric multidimensional scaling: classical scaling followed by stress
//! majorization (SMACOF).

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;

use crate::geometry::SummaryStats;

pub const MAX_ITERATIONS: usize = 10_000;
const GRADIENT_TOL: f64 = 1e-10;

/// Torgerson scaling: top-`n` eigenvectors of the double-centered squared
/// distances. Each eigenvector is signed so its largest-magnitude entry is
/// positive, which makes the output deterministic.
pub fn classical_scaling(d: &[Vec<f64>], n: usize) -> Array2<f64> {
    let t = d.len();
    let mut b = DMatrix::<f64>::from_fn(t, t, |i, j| -0.5 * d[i][j] * d[i][j]);
    let row_means: Vec<f64> = (0..t).map(|i| b.row(i).sum() / t as f64).collect();
    let total = row_means.iter().sum::<f64>() / t as f64;
    for i in 0..t {
        for j in 0..t {
            b[(i, j)] += total - row_means[i] - row_means[j];
        }
    }
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..t).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&c)));
    let mut x = Array2::zeros((t, n));
    for (k, &col) in order.iter().take(n).enumerate() {
        let lambda = eig.eigenvalues[col].max(0.0);
        let v = eig.eigenvectors.column(col);
        let pivot = (0..t)
            .max_by(|&a, &c| v[a].abs().total_cmp(&v[c].abs()).then(c.cmp(&a)))
            .unwrap_or(0);
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..t {
            x[[i, k]] = sign * v[i] * lambda.sqrt();
        }
    }
    x
}

fn distances(x: &Array2<f64>) -> Vec<Vec<f64>> {
    let t = x.nrows();
    let mut d = vec![vec![0.0; t]; t];
    for i in 0..t {
        for j in 0..i {
            let v = x
                .row(i)
                .iter()
                .zip(x.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

/// Raw metric stress `sum_{i<j} (d~_ij - d^_ij)^2`.
pub fn stress(x: &Array2<f64>, target: &[Vec<f64>]) -> f64 {
    let d = distances(x);
    let t = d.len();
    (0..t)
        .flat_map(|i| (i + 1..t).map(move |j| (i, j)))
        .map(|(i, j)| (d[i][j] - target[i][j]).powi(2))
        .sum()
}

/// Guttman transform `X <- B(X) X / T`. Returns the new configuration and
/// the norm of the stress gradient at the old one.
fn guttman(x: &Array2<f64>, target: &[Vec<f64>]) -> (Array2<f64>, f64) {
    let (t, n) = x.dim();
    let d = distances(x);
    let mut bx = Array2::<f64>::zeros((t, n));
    for i in 0..t {
        for j in 0..t {
            if i == j || d[i][j] == 0.0 {
                continue;
            }
            let bij = target[i][j] / d[i][j];
            for k in 0..n {
                bx[[i, k]] += bij * (x[[i, k]] - x[[j, k]]);
            }
        }
    }
    // for centered X, the stress gradient is 2 (T X - B(X) X)
    let mean = x.mean_axis(ndarray::Axis(0)).expect("nonempty");
    let mut grad2 = 0.0;
    let mut next = Array2::zeros((t, n));
    for i in 0..t {
        for k in 0..n {
            let g = 2.0 * (t as f64 * (x[[i, k]] - mean[k]) - bx[[i, k]]);
            grad2 += g * g;
            next[[i, k]] = bx[[i, k]] / t as f64;
        }
    }
    (next, grad2.sqrt())
}

fn center(x: &mut Array2<f64>) {
    if let Some(mean) = x.mean_axis(ndarray::Axis(0)) {
        for mut row in x.outer_iter_mut() {
            row -= &mean;
        }
    }
}

/// Runs stress majorization from `x`, stopping when the stress gradient norm
/// falls below `1e-10 * scale`, when stress stops decreasing, or after
/// [`MAX_ITERATIONS`].
pub fn smacof(mut x: Array2<f64>, target: &[Vec<f64>], scale: f64) -> Array2<f64> {
    center(&mut x);
    let mut s = stress(&x, target);
    for _ in 0..MAX_ITERATIONS {
        let (next, grad) = guttman(&x, target);
        if grad < GRADIENT_TOL * scale {
            break;
        }
        let s_next = stress(&next, target);
        if s_next > s {
            break;
        }
        let stalled = s - s_next <= 1e-15 * s;
        x = next;
        s = s_next;
        if stalled {
            break;
        }
    }
    center(&mut x);
    x
}

/// Centers in `n` dimensions minimizing metric stress against the target
/// center distances. A single class sits at the origin.
pub fn mds_init(target: &SummaryStats, n: usize) -> Array2<f64> {
    assert!(n == 2 || n == 3, "embedding dimension must be 2 or 3");
    let t = target.len();
    if t == 1 {
        return Array2::zeros((1, n));
    }
    let d = target.distances();
    let x = classical_scaling(d, n);
    smacof(x, d, target.length_scale())
}
