//! Radius estimators built on the distance-to-center (D2C) distribution and
//! on mean pairwise distances.
//!
//! All D2C estimators measure distances from the mean of the points. Each one
//! has a `*_from_d2c` form so resampling code can reuse precomputed D2C
//! values without materializing bootstrap samples.

use ndarray::ArrayView2;
use statrs::function::gamma::ln_gamma;

use super::tables::CalibrationTables;
use crate::error::{Error, Result};
use crate::stats;

fn require_points(points: ArrayView2<'_, f64>, min: usize) -> Result<()> {
    if points.nrows() == 0 {
        return Err(Error::Empty("point set"));
    }
    if points.nrows() < min {
        return Err(Error::InvalidArgument(format!(
            "need at least {min} points, got {}",
            points.nrows()
        )));
    }
    Ok(())
}

/// Arithmetic mean of the rows.
pub fn center_mean(points: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    require_points(points, 1)?;
    let p = points.nrows() as f64;
    let mut c = vec![0.0; points.ncols()];
    for row in points.outer_iter() {
        for (acc, x) in c.iter_mut().zip(row.iter()) {
            *acc += x;
        }
    }
    c.iter_mut().for_each(|x| *x /= p);
    Ok(c)
}

/// Mean of the selected rows (indices may repeat).
pub(crate) fn mean_of_rows(points: ArrayView2<'_, f64>, rows: &[usize]) -> Vec<f64> {
    let mut c = vec![0.0; points.ncols()];
    for &r in rows {
        for (acc, x) in c.iter_mut().zip(points.row(r).iter()) {
            *acc += x;
        }
    }
    let p = rows.len() as f64;
    c.iter_mut().for_each(|x| *x /= p);
    c
}

pub(crate) fn d2c_of_rows(points: ArrayView2<'_, f64>, rows: &[usize], center: &[f64]) -> Vec<f64> {
    rows.iter()
        .map(|&r| {
            points
                .row(r)
                .iter()
                .zip(center)
                .map(|(x, c)| (x - c) * (x - c))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

fn d2c_from_mean(points: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    require_points(points, 2)?;
    let c = center_mean(points)?;
    crate::geometry::d2c(points, &c)
}

/// Mean of the chi distribution with `n` degrees of freedom:
/// `sqrt(2) * Gamma((n + 1) / 2) / Gamma(n / 2)`, via log-gamma.
pub fn gamma_fn(n: usize) -> f64 {
    let n = n as f64;
    std::f64::consts::SQRT_2 * (ln_gamma((n + 1.0) / 2.0) - ln_gamma(n / 2.0)).exp()
}

/// Decision threshold on `var(d2c / median(d2c))` separating Gaussian-like
/// (above) from ball-like (at or below) D2C distributions.
pub fn adaptive_threshold(n: usize) -> f64 {
    (2.0_f64).powf(-1.0 - 4.0 / 3.0 * (n as f64).log2())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdaptiveBranch {
    Gaussian,
    Ball,
}

/// Which estimator the adaptive rule picks; `None` for a degenerate set
/// where every D2C is zero.
pub fn adaptive_branch(d2c: &[f64], dim: usize) -> Option<AdaptiveBranch> {
    if d2c.iter().all(|&d| d == 0.0) {
        return None;
    }
    let med = stats::median(d2c);
    if med == 0.0 {
        return Some(AdaptiveBranch::Gaussian);
    }
    let normalized: Vec<f64> = d2c.iter().map(|d| d / med).collect();
    if stats::variance(&normalized) > adaptive_threshold(dim) {
        Some(AdaptiveBranch::Gaussian)
    } else {
        Some(AdaptiveBranch::Ball)
    }
}

pub fn dcb1_from_d2c(d2c: &[f64], dim: usize) -> f64 {
    let max = d2c.iter().copied().fold(0.0, f64::max);
    let p = d2c.len() as f64;
    (1.0 + p.powf(-(dim as f64))) * max
}

pub fn dcg_from_d2c(d2c: &[f64], dim: usize) -> f64 {
    let p = d2c.len() as f64;
    let ss: f64 = d2c.iter().map(|d| d * d).sum();
    gamma_fn(dim) * (ss / (dim as f64 * (p - 1.0))).sqrt()
}

pub fn dcc_from_d2c(d2c: &[f64]) -> f64 {
    stats::median(d2c)
}

pub fn dcb2_from_d2c(d2c: &[f64], dim: usize, tables: &CalibrationTables) -> f64 {
    stats::median(d2c) + stats::std_dev(d2c) * tables.xi(dim)
}

pub fn adaptive_from_d2c(d2c: &[f64], dim: usize, tables: &CalibrationTables) -> f64 {
    match adaptive_branch(d2c, dim) {
        None => 0.0,
        Some(AdaptiveBranch::Gaussian) => dcg_from_d2c(d2c, dim),
        Some(AdaptiveBranch::Ball) => dcb2_from_d2c(d2c, dim, tables),
    }
}

/// Mean D2C, kept only as a naive benchmark baseline.
pub fn mean_d2c_from_d2c(d2c: &[f64]) -> f64 {
    stats::mean(d2c)
}

/// Max D2C inflated by `1 + P^-N`.
pub fn r_dcb1(points: ArrayView2<'_, f64>) -> Result<f64> {
    Ok(dcb1_from_d2c(&d2c_from_mean(points)?, points.ncols()))
}

/// Coordinate standard deviation scaled to the mean D2C of a Gaussian.
pub fn r_dcg(points: ArrayView2<'_, f64>) -> Result<f64> {
    Ok(dcg_from_d2c(&d2c_from_mean(points)?, points.ncols()))
}

/// Median D2C.
pub fn r_dcc(points: ArrayView2<'_, f64>) -> Result<f64> {
    Ok(dcc_from_d2c(&d2c_from_mean(points)?))
}

/// Median D2C plus `xi(N)` standard deviations.
pub fn r_dcb2(points: ArrayView2<'_, f64>, tables: &CalibrationTables) -> Result<f64> {
    Ok(dcb2_from_d2c(&d2c_from_mean(points)?, points.ncols(), tables))
}

/// `r_dcg` for Gaussian-like D2C spread, `r_dcb2` otherwise.
pub fn r_adapt(points: ArrayView2<'_, f64>, tables: &CalibrationTables) -> Result<f64> {
    Ok(adaptive_from_d2c(&d2c_from_mean(points)?, points.ncols(), tables))
}

pub fn r_mean_d2c(points: ArrayView2<'_, f64>) -> Result<f64> {
    Ok(mean_d2c_from_d2c(&d2c_from_mean(points)?))
}

/// `zeta(N)` times the mean off-diagonal entry of a within-class distance
/// matrix.
pub fn r_dist(
    distances: ArrayView2<'_, f64>,
    dim: usize,
    tables: &CalibrationTables,
) -> Result<f64> {
    let p = distances.nrows();
    if distances.ncols() != p {
        return Err(Error::InvalidArgument("distance matrix must be square".into()));
    }
    if p < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 points, got {p}")));
    }
    let mut sum = 0.0;
    for i in 0..p {
        for j in i + 1..p {
            sum += distances[[i, j]];
        }
    }
    let mean = sum / (p * (p - 1) / 2) as f64;
    Ok(mean / tables.inv_zeta(dim))
}

pub(crate) fn mean_pairwise_distance_rows(points: ArrayView2<'_, f64>, rows: &[usize]) -> f64 {
    let p = rows.len();
    let mut sum = 0.0;
    for a in 0..p {
        let ra = points.row(rows[a]);
        for &b in &rows[a + 1..] {
            let rb = points.row(b);
            sum += ra
                .iter()
                .zip(rb.iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
        }
    }
    sum / (p * (p - 1) / 2) as f64
}

/// Pairwise-distance estimator on point coordinates.
pub fn r_dist_points(points: ArrayView2<'_, f64>, tables: &CalibrationTables) -> Result<f64> {
    require_points(points, 2)?;
    let rows: Vec<usize> = (0..points.nrows()).collect();
    Ok(mean_pairwise_distance_rows(points, &rows) / tables.inv_zeta(points.ncols()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::sampling::{sample_ball, sample_cube, sample_gaussian};
    use ndarray::{array, Array2};

    fn t() -> CalibrationTables {
        CalibrationTables::default()
    }

    #[test]
    fn center_mean_examples() {
        assert_eq!(center_mean(array![[0.0, 0.0], [2.0, 0.0]].view()).unwrap(), vec![1.0, 0.0]);
        assert_eq!(center_mean(array![[1.0, 1.0, 1.0]].view()).unwrap(), vec![1.0, 1.0, 1.0]);
        assert!(center_mean(Array2::<f64>::zeros((0, 3)).view()).is_err());
    }

    #[test]
    fn center_mean_of_ball_samples() {
        let pts = sample_ball(5, 10_000, &[0.0; 5], 1.0, 11);
        let c = center_mean(pts.view()).unwrap();
        assert!(c.iter().all(|x| x.abs() < 0.05));
    }

    #[test]
    fn gamma_fn_closed_forms() {
        use std::f64::consts::PI;
        assert!((gamma_fn(1) - (2.0 / PI).sqrt()).abs() < 1e-12);
        assert!((gamma_fn(2) - (PI / 2.0).sqrt()).abs() < 1e-12);
        assert!((gamma_fn(3) - 2.0 * (2.0 / PI).sqrt()).abs() < 1e-12);
        assert!((gamma_fn(1) - 0.79788).abs() < 1e-5);
        assert!((gamma_fn(2) - 1.25331).abs() < 1e-5);
        assert!((gamma_fn(3) - 1.59577).abs() < 1e-5);
        // large N stays finite and approaches sqrt(N - 1/2)
        let g = gamma_fn(100_000);
        assert!((g - (100_000f64 - 0.5).sqrt()).abs() < 1e-3);
    }

    #[test]
    fn dcb1_examples() {
        assert!((r_dcb1(array![[0.0], [2.0]].view()).unwrap() - 1.5).abs() < 1e-15);
        let d = vec![1.0; 100];
        assert!((dcb1_from_d2c(&d, 2) - 1.0001).abs() < 1e-15);
        let d = vec![1.0; 10_000];
        assert!((dcb1_from_d2c(&d, 3) - 1.0).abs() < 1e-11);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn dcg_examples() {
        let r = r_dcg(array![[-1.0], [1.0]].view()).unwrap();
        assert!((r - 2f64.sqrt() * gamma_fn(1)).abs() < 1e-14);
        assert!((r - 1.1284).abs() < 1e-4);
        let pts = sample_gaussian(64, 10_000, &[0.0; 64], 1.0, 5);
        let r = r_dcg(pts.view()).unwrap();
        assert!((r / gamma_fn(64) - 1.0).abs() < 0.02);
    }

    #[test]
    fn dcc_examples() {
        assert_eq!(dcc_from_d2c(&[1.0, 2.0, 3.0]), 2.0);
        let pts = sample_cube(256, 10_000, &[0.0; 256], 1.0, 9);
        let r = r_dcc(pts.view()).unwrap();
        assert!((r / (256.0f64 / 12.0).sqrt() - 1.0).abs() < 0.02);
    }

    #[test]
    fn dcc_is_permutation_invariant() {
        let pts = sample_ball(4, 31, &[0.0; 4], 2.0, 1);
        let mut rev = pts.clone();
        rev.invert_axis(ndarray::Axis(0));
        // the mean is summed in a different order, so allow round-off
        let (a, b) = (r_dcc(pts.view()).unwrap(), r_dcc(rev.view()).unwrap());
        assert!((a - b).abs() < 1e-14 * a);
    }

    #[test]
    fn dcb2_zero_spread_is_median() {
        // four points on a circle about their mean
        let pts = array![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        let r = r_dcb2(pts.view(), &t()).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dcb2_on_high_dimensional_ball() {
        let reps = 100;
        let mean: f64 = (0..reps)
            .map(|s| r_dcb2(sample_ball(200, 200, &[0.0; 200], 1.0, s).view(), &t()).unwrap())
            .sum::<f64>()
            / reps as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean estimate {mean}");
    }

    #[test]
    fn adaptive_threshold_at_four() {
        assert!((adaptive_threshold(4) - 2f64.powf(-11.0 / 3.0)).abs() < 1e-15);
        assert!((adaptive_threshold(4) - 0.07874).abs() < 1e-5);
    }

    #[test]
    fn adaptive_dispatch() {
        let g = sample_gaussian(16, 1000, &[0.0; 16], 1.0, 2);
        let d = crate::geometry::d2c(g.view(), &center_mean(g.view()).unwrap()).unwrap();
        assert_eq!(adaptive_branch(&d, 16), Some(AdaptiveBranch::Gaussian));
        let b = sample_ball(16, 1000, &[0.0; 16], 1.0, 2);
        let d = crate::geometry::d2c(b.view(), &center_mean(b.view()).unwrap()).unwrap();
        assert_eq!(adaptive_branch(&d, 16), Some(AdaptiveBranch::Ball));
        assert_eq!(r_adapt(g.view(), &t()).unwrap(), r_dcg(g.view()).unwrap());
        assert_eq!(r_adapt(b.view(), &t()).unwrap(), r_dcb2(b.view(), &t()).unwrap());
    }

    #[test]
    fn degenerate_class_has_zero_radius() {
        let pts = array![[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]];
        assert_eq!(r_adapt(pts.view(), &t()).unwrap(), 0.0);
        assert_eq!(r_dcb1(pts.view()).unwrap(), 0.0);
        assert_eq!(r_dcg(pts.view()).unwrap(), 0.0);
        assert_eq!(r_dcc(pts.view()).unwrap(), 0.0);
        assert_eq!(r_dcb2(pts.view(), &t()).unwrap(), 0.0);
        assert_eq!(r_dist_points(pts.view(), &t()).unwrap(), 0.0);
    }

    #[test]
    fn dist_examples() {
        let d = array![[0.0, 2.0], [2.0, 0.0]];
        let r = r_dist(d.view(), 1, &t()).unwrap();
        assert!((r - 2.0 / 0.6673).abs() < 1e-12);
        assert!((r - 2.997).abs() < 1e-3);
        assert_eq!(r, r_dist_points(array![[0.0], [2.0]].view(), &t()).unwrap());
    }

    #[test]
    fn dist_on_high_dimensional_ball() {
        let reps = 100;
        let mean: f64 = (0..reps)
            .map(|s| r_dist_points(sample_ball(512, 200, &[0.0; 512], 1.0, s).view(), &t()).unwrap())
            .sum::<f64>()
            / reps as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean estimate {mean}");
    }

    #[test]
    fn estimators_are_scale_equivariant_and_rotation_invariant() {
        let pts = sample_ball(3, 50, &[0.5, -1.0, 2.0], 1.5, 4);
        let scaled = pts.mapv(|x| 3.5 * x);
        // rotate about the z axis and translate
        let (s, c) = 0.7f64.sin_cos();
        let mut moved = pts.clone();
        for mut row in moved.outer_iter_mut() {
            let (x, y) = (row[0], row[1]);
            row[0] = c * x - s * y + 4.0;
            row[1] = s * x + c * y - 2.0;
            row[2] += 1.0;
        }
        type Est = fn(ArrayView2<'_, f64>) -> f64;
        let ests: Vec<Est> = vec![
            |p| r_dcb1(p).unwrap(),
            |p| r_dcg(p).unwrap(),
            |p| r_dcc(p).unwrap(),
            |p| r_dcb2(p, &CalibrationTables::default()).unwrap(),
            |p| r_adapt(p, &CalibrationTables::default()).unwrap(),
            |p| r_dist_points(p, &CalibrationTables::default()).unwrap(),
        ];
        for est in ests {
            let base = est(pts.view());
            assert!((est(scaled.view()) - 3.5 * base).abs() < 1e-12 * base.max(1.0));
            assert!((est(moved.view()) - base).abs() < 1e-12 * base.max(1.0));
        }
    }
}
