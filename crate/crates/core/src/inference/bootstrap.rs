//! Bootstrap confidence intervals and the p-values they imply.

use crate::error::{Error, Result};
use crate::stats::{normal_cdf, normal_quantile, quantile_sorted, sorted_copy};

/// Minimum number of bootstrap estimates accepted by the interval routines.
pub const MIN_BOOTSTRAP: usize = 100;

fn check_boot(boot: &[f64]) -> Result<()> {
    if boot.len() < MIN_BOOTSTRAP {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_BOOTSTRAP} bootstrap estimates, got {}",
            boot.len()
        )));
    }
    if boot.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("bootstrap estimates"));
    }
    Ok(())
}

fn is_degenerate(sorted: &[f64]) -> bool {
    sorted.first() == sorted.last()
}

/// Equal-tailed percentile interval at level `1 - alpha`.
pub fn percentile_interval(boot: &[f64], alpha: f64) -> Result<(f64, f64)> {
    check_boot(boot)?;
    let sorted = sorted_copy(boot);
    Ok(percentile_from_sorted(&sorted, alpha))
}

fn percentile_from_sorted(sorted: &[f64], alpha: f64) -> (f64, f64) {
    (quantile_sorted(sorted, alpha / 2.0), quantile_sorted(sorted, 1.0 - alpha / 2.0))
}

/// Bias correction `z0` and acceleration `a` of a BCa interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcaParams {
    pub z0: f64,
    pub acceleration: f64,
}

/// `z0` from the fraction of bootstrap estimates below `observed` (ties
/// count half), and `a` from the skewness of jackknife estimates. The
/// jackknife may come in groups (one per resampled class); each group is
/// centered on its own mean.
pub fn bca_params(sorted_boot: &[f64], jack_groups: &[&[f64]], observed: f64) -> BcaParams {
    let b = sorted_boot.len() as f64;
    let below = sorted_boot.partition_point(|&v| v < observed);
    let upto = sorted_boot.partition_point(|&v| v <= observed);
    let frac = ((below as f64 + 0.5 * (upto - below) as f64) / b).clamp(0.5 / b, 1.0 - 0.5 / b);
    let z0 = normal_quantile(frac);

    let (mut s2, mut s3) = (0.0, 0.0);
    for g in jack_groups.iter().filter(|g| !g.is_empty()) {
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        for &v in g.iter() {
            let u = mean - v;
            s2 += u * u;
            s3 += u * u * u;
        }
    }
    let acceleration = if s2 > 0.0 { s3 / (6.0 * s2.powf(1.5)) } else { 0.0 };
    BcaParams { z0, acceleration }
}

fn bca_from_sorted(sorted: &[f64], p: BcaParams, alpha: f64) -> (f64, f64) {
    if is_degenerate(sorted) {
        return (sorted[0], sorted[0]);
    }
    let adjust = |z: f64| {
        let w = p.z0 + z;
        let denom = 1.0 - p.acceleration * w;
        if denom <= 0.0 {
            if w > 0.0 { 1.0 } else { 0.0 }
        } else {
            normal_cdf(p.z0 + w / denom)
        }
    };
    let lo = adjust(normal_quantile(alpha / 2.0));
    let hi = adjust(normal_quantile(1.0 - alpha / 2.0));
    (quantile_sorted(sorted, lo), quantile_sorted(sorted, hi))
}

/// Bias-corrected and accelerated interval at level `1 - alpha`. A
/// degenerate bootstrap distribution gives a zero-width interval.
pub fn bca_interval(boot: &[f64], jackknife: &[f64], observed: f64, alpha: f64) -> Result<(f64, f64)> {
    bca_interval_grouped(boot, &[jackknife], observed, alpha)
}

pub fn bca_interval_grouped(
    boot: &[f64],
    jack_groups: &[&[f64]],
    observed: f64,
    alpha: f64,
) -> Result<(f64, f64)> {
    check_boot(boot)?;
    let sorted = sorted_copy(boot);
    let p = bca_params(&sorted, jack_groups, observed);
    Ok(bca_from_sorted(&sorted, p, alpha))
}

/// Smallest `alpha` at which the interval produced by `interval(alpha)`
/// excludes 0, found by bisection; intervals must shrink as `alpha` grows.
/// Clamped below at `floor`.
fn implied_p(interval: impl Fn(f64) -> (f64, f64), floor: f64) -> f64 {
    let excludes = |a: f64| {
        let (lo, hi) = interval(a);
        lo > 0.0 || hi < 0.0
    };
    if excludes(floor) {
        return floor;
    }
    if !excludes(1.0) {
        return 1.0;
    }
    let (mut lo, mut hi) = (floor, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if excludes(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// A two-sided bootstrap test: interval at the configured level and the
/// p-value implied by the interval family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiOutcome {
    pub low: f64,
    pub high: f64,
    pub implied_p: f64,
}

impl CiOutcome {
    pub fn excludes_zero(&self) -> bool {
        self.low > 0.0 || self.high < 0.0
    }
}

pub fn bca_test(boot: &[f64], jack_groups: &[&[f64]], observed: f64, alpha: f64) -> Result<CiOutcome> {
    check_boot(boot)?;
    let sorted = sorted_copy(boot);
    let p = bca_params(&sorted, jack_groups, observed);
    let (low, high) = bca_from_sorted(&sorted, p, alpha);
    let floor = 1.0 / (boot.len() + 1) as f64;
    let implied_p = implied_p(|a| bca_from_sorted(&sorted, p, a), floor);
    Ok(CiOutcome { low, high, implied_p })
}

pub fn percentile_test(boot: &[f64], alpha: f64) -> Result<CiOutcome> {
    check_boot(boot)?;
    let sorted = sorted_copy(boot);
    let (low, high) = percentile_from_sorted(&sorted, alpha);
    let floor = 1.0 / (boot.len() + 1) as f64;
    let implied_p = implied_p(|a| percentile_from_sorted(&sorted, a), floor);
    Ok(CiOutcome { low, high, implied_p })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use crate::stats::mean;
    use rand::Rng;
    use rand_distr::{Exp, StandardNormal};

    #[test]
    fn reduces_to_percentile_without_bias_or_skew() {
        // symmetric grid about the observed value, symmetric jackknife
        let boot: Vec<f64> = (0..1001).map(|i| (i as f64 - 500.0) / 100.0).collect();
        let jack = [-1.0, 0.0, 1.0];
        let (a, b) = bca_interval(&boot, &jack, 0.0, 0.05).unwrap();
        let (c, d) = percentile_interval(&boot, 0.05).unwrap();
        let step = 0.01;
        assert!((a - c).abs() <= step && (b - d).abs() <= step);
    }

    #[test]
    fn degenerate_distribution() {
        let boot = vec![2.5; 200];
        assert_eq!(bca_interval(&boot, &[2.5, 2.5], 2.5, 0.05).unwrap(), (2.5, 2.5));
        assert!(bca_interval(&boot[..50], &[], 2.5, 0.05).is_err());
    }

    #[test]
    fn skewed_statistic_shifts_toward_long_tail() {
        // mean of exponential data: right-skewed bootstrap distribution
        let mut rng = seed::rng(4);
        let exp = Exp::new(1.0).unwrap();
        let data: Vec<f64> = (0..30).map(|_| rng.sample(exp)).collect();
        let obs = mean(&data);
        let boot: Vec<f64> = (0..4000)
            .map(|_| (0..30).map(|_| data[rng.random_range(0..30)]).sum::<f64>() / 30.0)
            .collect();
        let jack: Vec<f64> = (0..30)
            .map(|i| data.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v).sum::<f64>() / 29.0)
            .collect();
        let (blo, bhi) = bca_interval(&boot, &jack, obs, 0.05).unwrap();
        let (plo, phi) = percentile_interval(&boot, 0.05).unwrap();
        assert!(blo > plo && bhi > phi, "bca ({blo}, {bhi}) percentile ({plo}, {phi})");
    }

    #[test]
    fn coverage_of_a_mean() {
        let mut hits = 0;
        let sims = 1000;
        let n = 40;
        for s in 0..sims {
            let mut rng = seed::derived_rng(21, &[s]);
            let data: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let obs = mean(&data);
            let boot: Vec<f64> = (0..1000)
                .map(|_| (0..n).map(|_| data[rng.random_range(0..n)]).sum::<f64>() / n as f64)
                .collect();
            let total: f64 = data.iter().sum();
            let jack: Vec<f64> = data.iter().map(|v| (total - v) / (n - 1) as f64).collect();
            let (lo, hi) = bca_interval(&boot, &jack, obs, 0.05).unwrap();
            hits += usize::from(lo <= 0.0 && 0.0 <= hi);
        }
        let cov = hits as f64 / sims as f64;
        assert!((0.92..=0.975).contains(&cov), "coverage {cov}");
    }

    #[test]
    fn implied_p_agrees_with_decision() {
        let mut rng = seed::rng(8);
        for shift in [0.0, 0.5, 1.0, 1.7, 2.0, 2.5, 4.0] {
            let boot: Vec<f64> = (0..2000).map(|_| shift + rng.sample::<f64, _>(StandardNormal)).collect();
            let jack: Vec<f64> = (0..20).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            for alpha in [0.01, 0.05, 0.2] {
                let t = bca_test(&boot, &[&jack], shift, alpha).unwrap();
                assert_eq!(t.excludes_zero(), t.implied_p <= alpha, "shift {shift} alpha {alpha}");
                let t = percentile_test(&boot, alpha).unwrap();
                assert_eq!(t.excludes_zero(), t.implied_p <= alpha, "shift {shift} alpha {alpha}");
                assert!(t.implied_p >= 1.0 / 2001.0 && t.implied_p <= 1.0);
            }
        }
    }
}
