//! Radius-estimator benchmark on synthetic data with known radius.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::Distribution;
use crate::error::{Error, Result};
use crate::estimators::{fit_class, r_mean_d2c, CalibrationTables, EstimatorChoice, EstimatorKind};
use crate::seed;
use crate::stats;

/// An estimator under benchmark: one of the fitted estimators, or the naive
/// mean distance-to-center baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BenchEstimator {
    Fitted(EstimatorKind),
    Baseline(Baseline),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Baseline {
    #[serde(rename = "MEAN_D2C")]
    MeanD2c,
}

impl BenchEstimator {
    pub const MEAN_D2C: BenchEstimator = BenchEstimator::Baseline(Baseline::MeanD2c);

    pub fn name(self) -> &'static str {
        match self {
            BenchEstimator::Fitted(k) => k.name(),
            BenchEstimator::Baseline(Baseline::MeanD2c) => "MEAN_D2C",
        }
    }
}

impl std::fmt::Display for BenchEstimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BenchEstimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("MEAN_D2C") {
            return Ok(Self::MEAN_D2C);
        }
        s.parse().map(BenchEstimator::Fitted)
    }
}

/// One row of benchmark or calibration output. `mean`/`std` summarize the
/// radius-normalized squared error for benchmarks and the test estimate for
/// calibration runs; `fpr` is only set for calibration runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    #[serde(rename = "estimator")]
    pub name: String,
    pub distribution: Distribution,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "P")]
    pub p: usize,
    pub mean: f64,
    pub std: f64,
    pub fpr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub estimators: Vec<BenchEstimator>,
    pub distributions: Vec<Distribution>,
    pub n_grid: Vec<usize>,
    pub p_grid: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    /// Desk-scale defaults: every estimator except MCMC, powers of two up to
    /// 4096, up to 1000 points, 100 repetitions.
    fn default() -> Self {
        let mut estimators: Vec<BenchEstimator> = EstimatorKind::ALL
            .into_iter()
            .filter(|k| *k != EstimatorKind::Mcmc)
            .map(BenchEstimator::Fitted)
            .collect();
        estimators.push(BenchEstimator::MEAN_D2C);
        Self {
            estimators,
            distributions: Distribution::ALL.to_vec(),
            n_grid: (0..=12).map(|k| 1 << k).collect(),
            p_grid: vec![50, 200, 1000],
            repetitions: 100,
            seed: 0,
        }
    }
}

fn estimate(est: BenchEstimator, points: ndarray::ArrayView2<'_, f64>, tables: &CalibrationTables, seed: u64) -> Result<f64> {
    match est {
        BenchEstimator::Baseline(Baseline::MeanD2c) => r_mean_d2c(points),
        BenchEstimator::Fitted(kind) => {
            let mut choice = EstimatorChoice::new(kind);
            choice.seed = seed;
            fit_class(points, &choice, tables).map(|h| h.radius)
        }
    }
}

/// Mean and standard deviation of `((r^ - r) / r)^2` per grid cell. All
/// estimators in a cell see the same datasets.
pub fn estimator_benchmark(config: &BenchConfig, tables: &CalibrationTables) -> Result<Vec<BenchRow>> {
    if config.estimators.is_empty()
        || config.distributions.is_empty()
        || config.n_grid.is_empty()
        || config.p_grid.is_empty()
        || config.repetitions == 0
    {
        return Err(Error::InvalidArgument("benchmark grids must be nonempty".into()));
    }
    let mut rows = Vec::new();
    for &dist in &config.distributions {
        for &n in &config.n_grid {
            for &p in &config.p_grid {
                let truth = 1.0;
                let scale = truth / dist.true_radius(n, 1.0);
                let errors: Vec<Vec<f64>> = (0..config.repetitions)
                    .into_par_iter()
                    .map(|rep| {
                        let s = seed::derive(config.seed, &[dist as u64, n as u64, p as u64, rep as u64]);
                        let pts = dist.sample(n, p, &vec![0.0; n], scale, s);
                        config
                            .estimators
                            .iter()
                            .map(|&e| estimate(e, pts.view(), tables, s).map(|r| ((r - truth) / truth).powi(2)))
                            .collect::<Result<Vec<f64>>>()
                    })
                    .collect::<Result<_>>()?;
                for (k, &e) in config.estimators.iter().enumerate() {
                    let col: Vec<f64> = errors.iter().map(|r| r[k]).collect();
                    rows.push(BenchRow {
                        name: e.name().to_string(),
                        distribution: dist,
                        n,
                        p,
                        mean: stats::mean(&col),
                        std: stats::std_dev(&col),
                        fpr: None,
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn rows_to_csv(rows: &[BenchRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
