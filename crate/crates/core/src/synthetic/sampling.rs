//! Random point clouds with known geometry.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::estimators::gamma_fn;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Distribution {
    Ball,
    Gaussian,
    Cube,
}

impl Distribution {
    pub const ALL: [Distribution; 3] = [Distribution::Ball, Distribution::Gaussian, Distribution::Cube];

    pub fn name(self) -> &'static str {
        match self {
            Distribution::Ball => "BALL",
            Distribution::Gaussian => "GAUSSIAN",
            Distribution::Cube => "CUBE",
        }
    }

    /// Draws `p` points in `n` dimensions. `scale` is the radius for a ball,
    /// the coordinate standard deviation for a Gaussian and the edge length
    /// for a cube.
    pub fn sample(self, n: usize, p: usize, center: &[f64], scale: f64, seed: u64) -> Array2<f64> {
        match self {
            Distribution::Ball => sample_ball(n, p, center, scale, seed),
            Distribution::Gaussian => sample_gaussian(n, p, center, scale, seed),
            Distribution::Cube => sample_cube(n, p, center, scale, seed),
        }
    }

    /// Radius the estimators are scored against: the ball radius, the mean
    /// distance to center of the Gaussian, and the large-`n` distance to
    /// center of the cube.
    pub fn true_radius(self, n: usize, scale: f64) -> f64 {
        match self {
            Distribution::Ball => scale,
            Distribution::Gaussian => scale * gamma_fn(n),
            Distribution::Cube => scale * (n as f64 / 12.0).sqrt(),
        }
    }
}

impl std::fmt::Display for Distribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Distribution {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        let u = s.trim().to_ascii_uppercase();
        Self::ALL
            .into_iter()
            .find(|d| d.name() == u)
            .ok_or_else(|| crate::Error::InvalidArgument(format!("unknown distribution `{s}`")))
    }
}

fn check_center(n: usize, center: &[f64]) {
    assert_eq!(center.len(), n, "center has {} coordinates, expected {n}", center.len());
}

/// Uniform points in the `n`-ball: a normalized Gaussian direction times a
/// radius distributed as `radius * U^(1/n)`.
pub fn sample_ball(n: usize, p: usize, center: &[f64], radius: f64, seed: u64) -> Array2<f64> {
    check_center(n, center);
    let mut rng = seed::rng(seed);
    let mut out = Array2::zeros((p, n));
    for mut row in out.outer_iter_mut() {
        let mut norm2 = 0.0_f64;
        while norm2 == 0.0 {
            for x in row.iter_mut() {
                *x = rng.sample(StandardNormal);
            }
            norm2 = row.iter().map(|x| x * x).sum();
        }
        let u: f64 = rng.random();
        let s = radius * u.powf(1.0 / n as f64) / norm2.sqrt();
        for (x, c) in row.iter_mut().zip(center) {
            *x = *x * s + c;
        }
    }
    out
}

/// Isotropic Gaussian with per-coordinate standard deviation `scale`.
pub fn sample_gaussian(n: usize, p: usize, center: &[f64], scale: f64, seed: u64) -> Array2<f64> {
    check_center(n, center);
    let mut rng = seed::rng(seed);
    Array2::from_shape_fn((p, n), |(_, j)| center[j] + scale * rng.sample::<f64, _>(StandardNormal))
}

/// Uniform points in the axis-aligned cube of edge `scale` centered at `center`.
pub fn sample_cube(n: usize, p: usize, center: &[f64], scale: f64, seed: u64) -> Array2<f64> {
    check_center(n, center);
    let mut rng = seed::rng(seed);
    let u = Uniform::new(-0.5, 0.5).expect("valid range");
    Array2::from_shape_fn((p, n), |(_, j)| center[j] + scale * rng.sample(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::center_mean;
    use crate::geometry::d2c;

    #[test]
    fn ball_support_and_interval_case() {
        let pts = sample_ball(5, 2000, &[1.0; 5], 2.0, 1);
        let d = d2c(pts.view(), &[1.0; 5]).unwrap();
        assert!(d.iter().all(|&x| x <= 2.0 + 1e-12));

        // N = 1: distance to center is uniform on [0, r]
        let pts = sample_ball(1, 10_000, &[0.0], 1.0, 2);
        let mut d = d2c(pts.view(), &[0.0]).unwrap();
        d.sort_by(f64::total_cmp);
        let p = d.len() as f64;
        let ks = d
            .iter()
            .enumerate()
            .map(|(i, &x)| ((i + 1) as f64 / p - x).abs().max((x - i as f64 / p).abs()))
            .fold(0.0, f64::max);
        assert!(ks < 0.05, "ks {ks}");
    }

    #[test]
    fn ball_concentrates_on_surface_in_high_dimension() {
        let pts = sample_ball(4096, 200, &vec![0.0; 4096], 1.0, 3);
        let d = d2c(pts.view(), &vec![0.0; 4096]).unwrap();
        let m = crate::stats::mean(&d);
        assert!((m - 1.0).abs() < 1e-3);
        assert!(crate::stats::variance(&d) < 1e-6);
    }

    #[test]
    fn gaussian_and_cube_d2c() {
        let n = 64;
        let g = sample_gaussian(n, 10_000, &vec![0.0; n], 1.0, 4);
        let d = d2c(g.view(), &vec![0.0; n]).unwrap();
        assert!((crate::stats::mean(&d) / gamma_fn(n) - 1.0).abs() < 0.01);

        let n = 512;
        let c = sample_cube(n, 2000, &vec![3.0; n], 2.0, 5);
        assert!(c.iter().all(|&x| (2.0..=4.0).contains(&x)));
        let center = center_mean(c.view()).unwrap();
        let d = d2c(c.view(), &center).unwrap();
        assert!((crate::stats::mean(&d) / (2.0 * (n as f64 / 12.0).sqrt()) - 1.0).abs() < 0.01);
    }

    #[test]
    fn generators_are_seeded() {
        assert_eq!(sample_ball(3, 10, &[0.0; 3], 1.0, 9), sample_ball(3, 10, &[0.0; 3], 1.0, 9));
        assert_ne!(sample_ball(3, 10, &[0.0; 3], 1.0, 9), sample_ball(3, 10, &[0.0; 3], 1.0, 10));
        assert_eq!(sample_cube(3, 10, &[0.0; 3], 1.0, 9), sample_cube(3, 10, &[0.0; 3], 1.0, 9));
    }
}
