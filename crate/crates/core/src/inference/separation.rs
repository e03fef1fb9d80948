//! Cross-validated separation and its permutation test.

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{ResamplingConfig, TestKind, TestResult};
use crate::error::{Error, Result};
use crate::seed::{self, Rng};
use crate::stats::{quantile_sorted, sorted_copy};

/// Random half-splits averaged per evaluation of the statistic, for both the
/// observed value and every permutation.
pub const SPLITS: usize = 10;
const MIN_POINTS: usize = 4;

/// Two classes addressed through one index space: `0..P_i` are rows of the
/// first class, `P_i..P_i + P_j` rows of the second.
struct Pool<'a> {
    a: ArrayView2<'a, f64>,
    b: ArrayView2<'a, f64>,
}

impl Pool<'_> {
    fn add_row(&self, k: usize, acc: &mut [f64]) {
        let row = if k < self.a.nrows() { self.a.row(k) } else { self.b.row(k - self.a.nrows()) };
        acc.iter_mut().zip(row.iter()).for_each(|(s, x)| *s += x);
    }

    fn mean(&self, rows: &[usize]) -> Vec<f64> {
        let mut m = vec![0.0; self.a.ncols()];
        for &k in rows {
            self.add_row(k, &mut m);
        }
        m.iter_mut().for_each(|v| *v /= rows.len() as f64);
        m
    }

    /// One random half-split of each group.
    fn split_statistic(&self, gi: &mut [usize], gj: &mut [usize], rng: &mut Rng) -> f64 {
        gi.shuffle(rng);
        gj.shuffle(rng);
        let (ia, ib) = gi.split_at(gi.len() / 2);
        let (ja, jb) = gj.split_at(gj.len() / 2);
        let (mia, mja, mib, mjb) = (self.mean(ia), self.mean(ja), self.mean(ib), self.mean(jb));
        let dot: f64 = (0..mia.len()).map(|k| (mia[k] - mja[k]) * (mib[k] - mjb[k])).sum();
        dot.signum() * dot.abs().sqrt()
    }

    fn averaged(&self, gi: &mut [usize], gj: &mut [usize], rng: &mut Rng) -> f64 {
        (0..SPLITS).map(|_| self.split_statistic(gi, gj, rng)).sum::<f64>() / SPLITS as f64
    }
}

fn check(points_i: ArrayView2<'_, f64>, points_j: ArrayView2<'_, f64>) -> Result<()> {
    if points_i.ncols() != points_j.ncols() {
        return Err(Error::DimensionMismatch { expected: points_i.ncols(), found: points_j.ncols() });
    }
    for p in [points_i.nrows(), points_j.nrows()] {
        if p < MIN_POINTS {
            return Err(Error::InvalidArgument(format!(
                "separation test needs at least {MIN_POINTS} points per class, got {p}"
            )));
        }
    }
    Ok(())
}

/// `sign(v_A . v_B) sqrt(|v_A . v_B|)` where `v_A`, `v_B` are the center
/// differences computed on independent random halves of each class.
pub fn crossval_separation(
    points_i: ArrayView2<'_, f64>,
    points_j: ArrayView2<'_, f64>,
    split_seed: u64,
) -> Result<f64> {
    check(points_i, points_j)?;
    let pool = Pool { a: points_i, b: points_j };
    let pi = points_i.nrows();
    let mut gi: Vec<usize> = (0..pi).collect();
    let mut gj: Vec<usize> = (pi..pi + points_j.nrows()).collect();
    Ok(pool.split_statistic(&mut gi, &mut gj, &mut seed::rng(split_seed)))
}

/// One-sided permutation test of a positive center distance.
///
/// The statistic is the cross-validated separation averaged over
/// [`SPLITS`] random half-splits. Each permutation reassigns the pooled
/// points to the two classes (keeping class sizes) and re-evaluates the
/// same averaged statistic.
pub fn separation_test(
    points_i: ArrayView2<'_, f64>,
    points_j: ArrayView2<'_, f64>,
    config: &ResamplingConfig,
) -> Result<TestResult> {
    separation_test_with_resamples(points_i, points_j, config).map(|(r, _)| r)
}

/// [`separation_test`] that also returns the permutation distribution.
pub(crate) fn separation_test_with_resamples(
    points_i: ArrayView2<'_, f64>,
    points_j: ArrayView2<'_, f64>,
    config: &ResamplingConfig,
) -> Result<(TestResult, Vec<f64>)> {
    config.validate()?;
    check(points_i, points_j)?;
    let pool = Pool { a: points_i, b: points_j };
    let (pi, pj) = (points_i.nrows(), points_j.nrows());

    let observed = {
        let mut gi: Vec<usize> = (0..pi).collect();
        let mut gj: Vec<usize> = (pi..pi + pj).collect();
        pool.averaged(&mut gi, &mut gj, &mut seed::derived_rng(config.seed, &[u64::MAX]))
    };
    let perms: Vec<f64> = (0..config.n_resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = seed::derived_rng(config.seed, &[b as u64]);
            let mut all: Vec<usize> = (0..pi + pj).collect();
            all.shuffle(&mut rng);
            let (gi, gj) = all.split_at_mut(pi);
            pool.averaged(gi, gj, &mut rng)
        })
        .collect();

    let exceed = perms.iter().filter(|&&v| v >= observed).count();
    let p = (1 + exceed) as f64 / (1 + config.n_resamples) as f64;
    let threshold = quantile_sorted(&sorted_copy(&perms), 1.0 - config.alpha_level);
    let significant = observed > threshold;
    let result = TestResult {
        kind: TestKind::Separation,
        estimate: observed,
        ci_low: None,
        ci_high: None,
        p_value: Some(p),
        implied_p: None,
        p_adjusted: p,
        significant_uncorrected: significant,
        significant,
        n_resamples: config.n_resamples,
        warnings: Vec::new(),
    };
    Ok((result, perms))
}
