//! Monte-Carlo re-derivation of the calibration tables.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::sampling::sample_ball;
use crate::error::{Error, Result};
use crate::estimators::center_mean;
use crate::estimators::radius::mean_pairwise_distance_rows;
use crate::geometry::d2c;
use crate::seed;
use crate::stats;

/// Points per simulated dataset when deriving `xi`.
pub const XI_POINTS: usize = 200;
/// Points per simulated dataset when deriving `1/zeta` (all pairs are used).
pub const ZETA_POINTS: usize = 64;

fn check(n_grid: &[usize], repetitions: usize) -> Result<()> {
    if n_grid.is_empty() || n_grid.contains(&0) || repetitions == 0 {
        return Err(Error::InvalidArgument("need a nonempty grid of positive dimensions and repetitions".into()));
    }
    if n_grid.iter().any(|&n| u32::try_from(n).is_err()) {
        return Err(Error::InvalidArgument("dimension too large for a table key".into()));
    }
    Ok(())
}

/// For each `N`, the `xi` minimizing the mean squared error of
/// `median(D2C) + xi * std(D2C)` on unit `N`-balls of [`XI_POINTS`] points.
/// The least-squares minimizer is `sum s (1 - m) / sum s^2` over repetitions.
pub fn derive_xi(n_grid: &[usize], repetitions: usize, seed: u64) -> Result<BTreeMap<u32, f64>> {
    check(n_grid, repetitions)?;
    n_grid
        .iter()
        .map(|&n| {
            let terms: Vec<(f64, f64)> = (0..repetitions)
                .into_par_iter()
                .map(|rep| {
                    let pts = sample_ball(n, XI_POINTS, &vec![0.0; n], 1.0, seed::derive(seed, &[n as u64, rep as u64]));
                    let c = center_mean(pts.view()).expect("nonempty");
                    let d = d2c(pts.view(), &c).expect("dimensions agree");
                    let (m, s) = (stats::median(&d), stats::std_dev(&d));
                    (s * (1.0 - m), s * s)
                })
                .collect();
            let (num, den) = terms.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
            Ok((n as u32, num / den))
        })
        .collect()
}

/// For each `N`, the mean distance between two uniform points of the unit
/// `N`-ball, i.e. `1/zeta(N)`.
pub fn derive_zeta(n_grid: &[usize], repetitions: usize, seed: u64) -> Result<BTreeMap<u32, f64>> {
    check(n_grid, repetitions)?;
    let rows: Vec<usize> = (0..ZETA_POINTS).collect();
    n_grid
        .iter()
        .map(|&n| {
            let means: Vec<f64> = (0..repetitions)
                .into_par_iter()
                .map(|rep| {
                    let pts = sample_ball(n, ZETA_POINTS, &vec![0.0; n], 1.0, seed::derive(seed, &[n as u64, rep as u64]));
                    mean_pairwise_distance_rows(pts.view(), &rows)
                })
                .collect();
            Ok((n as u32, means.iter().sum::<f64>() / repetitions as f64))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_in_one_dimension() {
        let z = derive_zeta(&[1], 400, 1).unwrap();
        assert!((z[&1] - 2.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn zeta_is_increasing() {
        let z = derive_zeta(&[1, 4, 32, 256], 50, 2).unwrap();
        let v: Vec<f64> = z.values().copied().collect();
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn xi_low_dimensions() {
        let x = derive_xi(&[2, 16], 200, 3).unwrap();
        assert!((x[&2] / 1.2733 - 1.0).abs() < 0.15);
        assert!(x[&16] < x[&2]);
    }
}
