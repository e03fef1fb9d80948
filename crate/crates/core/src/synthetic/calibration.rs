//! False-positive rates of the significance tests on simulated nulls.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::bench::BenchRow;
use super::sampling::Distribution;
use crate::error::{Error, Result};
use crate::estimators::{CalibrationTables, EstimatorChoice};
use crate::inference::resampling::run_with_resamples;
use crate::inference::{ResamplingConfig, TestKind, LARGE_CLASS_WARNING};
use crate::seed;
use crate::stats;

/// Data-generating settings for null simulations. The geometry is fixed by
/// the test kind: a shared center for the separation test, tangent spheres
/// for the overlap test, equal radii three radii apart for the radius
/// difference test, and an equilateral triangle of equal spheres (side three
/// radii) for the difference tests, comparing pair (0, 1) with (1, 2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSpec {
    pub dim: usize,
    pub samples: usize,
    pub radius: f64,
    pub distribution: Distribution,
}

impl NullSpec {
    fn centers(&self, kind: TestKind) -> Result<Vec<Vec<f64>>> {
        let r = self.radius;
        let at = |coords: &[f64]| -> Result<Vec<f64>> {
            if coords.len() > self.dim {
                return Err(Error::InvalidArgument(format!("{kind} null needs at least {} dimensions", coords.len())));
            }
            let mut v = coords.to_vec();
            v.resize(self.dim, 0.0);
            Ok(v)
        };
        let side = 3.0 * r;
        Ok(match kind {
            TestKind::Separation => vec![at(&[0.0])?, at(&[0.0])?],
            TestKind::Overlap => vec![at(&[0.0])?, at(&[2.0 * r])?],
            TestKind::RadiusDiff => vec![at(&[0.0])?, at(&[side])?],
            TestKind::SeparationDiff | TestKind::OverlapDiff => vec![
                at(&[0.0, 0.0])?,
                at(&[side, 0.0])?,
                at(&[0.5 * side, 0.5 * 3f64.sqrt() * side])?,
            ],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FprResult {
    pub kind: TestKind,
    pub null: NullSpec,
    pub n_simulations: usize,
    pub rejections: usize,
    pub fpr: f64,
    /// Mean and variance of the observed statistic across simulations.
    pub estimate_mean: f64,
    pub estimate_variance: f64,
    /// Mean within-simulation variance of the permutation or bootstrap
    /// distribution, to compare with `estimate_variance`.
    pub resample_variance: f64,
    /// Set when the class size is above the range where the test is known
    /// to hold its level.
    pub flagged: bool,
    pub failures: usize,
}

impl FprResult {
    pub fn to_row(&self) -> BenchRow {
        BenchRow {
            name: self.kind.name().to_string(),
            distribution: self.null.distribution,
            n: self.null.dim,
            p: self.null.samples,
            mean: self.estimate_mean,
            std: self.estimate_variance.sqrt(),
            fpr: Some(self.fpr),
        }
    }
}

/// Runs `n_simulations` null datasets through the test of `kind` and reports
/// the fraction declared significant at `config.alpha_level` (no FDR).
pub fn calibration_fpr(
    kind: TestKind,
    null: &NullSpec,
    n_simulations: usize,
    choice: &EstimatorChoice,
    tables: &CalibrationTables,
    config: &ResamplingConfig,
) -> Result<FprResult> {
    config.validate()?;
    if n_simulations == 0 {
        return Err(Error::InvalidArgument("n_simulations must be positive".into()));
    }
    let centers = null.centers(kind)?;
    let scale = null.radius / null.distribution.true_radius(null.dim, 1.0);
    let mut estimates = Vec::with_capacity(n_simulations);
    let mut resample_vars = Vec::with_capacity(n_simulations);
    let mut rejections = 0;
    let mut failures = 0;
    for sim in 0..n_simulations {
        let data: Vec<_> = centers
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let s = seed::derive(config.seed, &[kind.id(), sim as u64, k as u64]);
                null.distribution.sample(null.dim, null.samples, c, scale, s)
            })
            .collect();
        let views: Vec<ArrayView2<'_, f64>> = data.iter().map(|d| d.view()).collect();
        let cfg = config.derived(&[kind.id(), sim as u64, u64::MAX]);
        match run_with_resamples(kind, &views, (0, 1), (1, 2), choice, tables, &cfg) {
            Ok((result, resamples)) => {
                rejections += usize::from(result.significant_uncorrected);
                estimates.push(result.estimate);
                resample_vars.push(stats::variance(&resamples));
            }
            Err(e) => {
                log::warn!("{kind} null simulation {sim} failed: {e}");
                failures += 1;
            }
        }
    }
    let done = estimates.len();
    Ok(FprResult {
        kind,
        null: null.clone(),
        n_simulations,
        rejections,
        fpr: if done > 0 { rejections as f64 / done as f64 } else { f64::NAN },
        estimate_mean: stats::mean(&estimates),
        estimate_variance: stats::variance(&estimates),
        resample_variance: stats::mean(&resample_vars),
        flagged: null.samples > LARGE_CLASS_WARNING,
        failures,
    })
}
