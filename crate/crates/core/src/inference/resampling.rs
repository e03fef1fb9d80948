//! Bootstrap tests: overlap and radius difference (BCa), and differences of
//! separations or overlaps between two class pairs (percentile).

use ndarray::ArrayView2;
use rand::Rng as _;
use rayon::prelude::*;

use super::bootstrap::{bca_test, percentile_test, CiOutcome};
use super::{ResamplingConfig, TestKind, TestResult, LARGE_CLASS_WARNING};
use crate::error::{Error, Result};
use crate::estimators::{fit_rows, CalibrationTables, EstimatorChoice};
use crate::geometry::{euclidean, Hypersphere};
use crate::seed;

type Stat<'s> = dyn Fn(&[Hypersphere]) -> f64 + Sync + 's;

struct Resampler<'a> {
    classes: Vec<ArrayView2<'a, f64>>,
    choice: &'a EstimatorChoice,
    tables: &'a CalibrationTables,
}

impl Resampler<'_> {
    fn fit(&self, c: usize, rows: &[usize], mcmc_seed: u64) -> Result<Hypersphere> {
        let mut choice = self.choice.clone();
        choice.seed = mcmc_seed;
        fit_rows(self.classes[c], rows, &choice, self.tables)
    }

    fn full(&self) -> Result<Vec<Hypersphere>> {
        (0..self.classes.len())
            .map(|c| {
                let rows: Vec<usize> = (0..self.classes[c].nrows()).collect();
                self.fit(c, &rows, seed::derive(self.choice.seed, &[c as u64]))
            })
            .collect()
    }

    /// Statistic on `n` bootstrap resamples, each resampling every class
    /// with replacement.
    fn bootstrap(&self, config: &ResamplingConfig, stat: &Stat<'_>) -> Result<Vec<f64>> {
        (0..config.n_resamples)
            .into_par_iter()
            .map(|b| {
                let mut rng = seed::derived_rng(config.seed, &[b as u64]);
                let spheres = (0..self.classes.len())
                    .map(|c| {
                        let p = self.classes[c].nrows();
                        let rows: Vec<usize> = (0..p).map(|_| rng.random_range(0..p)).collect();
                        self.fit(c, &rows, seed::derive(config.seed, &[b as u64, c as u64]))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(stat(&spheres))
            })
            .collect()
    }

    /// Leave-one-out statistic, one group per class.
    fn jackknife(&self, full: &[Hypersphere], stat: &Stat<'_>) -> Result<Vec<Vec<f64>>> {
        (0..self.classes.len())
            .map(|c| {
                let p = self.classes[c].nrows();
                (0..p)
                    .into_par_iter()
                    .map(|k| {
                        let rows: Vec<usize> = (0..p).filter(|&r| r != k).collect();
                        let mut spheres = full.to_vec();
                        spheres[c] = self.fit(c, &rows, seed::derive(self.choice.seed, &[c as u64, k as u64]))?;
                        Ok(stat(&spheres))
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect()
    }
}

fn overlap(a: &Hypersphere, b: &Hypersphere) -> f64 {
    a.radius + b.radius - euclidean(&a.center, &b.center)
}

fn check_pair(points_i: ArrayView2<'_, f64>, points_j: ArrayView2<'_, f64>) -> Result<()> {
    if points_i.ncols() != points_j.ncols() {
        return Err(Error::DimensionMismatch { expected: points_i.ncols(), found: points_j.ncols() });
    }
    Ok(())
}

fn result(kind: TestKind, estimate: f64, ci: CiOutcome, config: &ResamplingConfig, warnings: Vec<String>) -> TestResult {
    let significant = ci.excludes_zero();
    TestResult {
        kind,
        estimate,
        ci_low: Some(ci.low),
        ci_high: Some(ci.high),
        p_value: None,
        implied_p: Some(ci.implied_p),
        p_adjusted: ci.implied_p,
        significant_uncorrected: significant,
        significant,
        n_resamples: config.n_resamples,
        warnings,
    }
}

fn large_class_warnings(classes: &[ArrayView2<'_, f64>]) -> Vec<String> {
    classes
        .iter()
        .enumerate()
        .filter(|(_, c)| c.nrows() > LARGE_CLASS_WARNING)
        .map(|(k, c)| {
            format!(
                "class {k} has {} points; this test is unreliable above {LARGE_CLASS_WARNING} points per class",
                c.nrows()
            )
        })
        .collect()
}

fn bca_pair_test(
    kind: TestKind,
    points_i: ArrayView2<'_, f64>,
    points_j: ArrayView2<'_, f64>,
    choice: &EstimatorChoice,
    tables: &CalibrationTables,
    config: &ResamplingConfig,
    stat: &Stat<'_>,
) -> Result<(TestResult, Vec<f64>)> {
    config.validate()?;
    check_pair(points_i, points_j)?;
    let rs = Resampler { classes: vec![points_i, points_j], choice, tables };
    let warnings = large_class_warnings(&rs.classes);
    for w in &warnings {
        log::warn!("{kind}: {w}");
    }
    let full = rs.full()?;
    let observed = stat(&full);
    let boot = rs.bootstrap(config, stat)?;
    let jack = rs.jackknife(&full, stat)?;
    let groups: Vec<&[f64]> = jack.iter().map(Vec::as_slice).collect();
    let ci = bca_test(&boot, &groups, observed, config.alpha_level)?;
    Ok((result(kind, observed, ci, config, warnings), boot))
}

/// Two-sided BCa test of the overlap `r_i + r_j - d_ij` against 0.
pub fn overlap_test(
    points_i: ArrayView2<'_, f64>,
    points_j: ArrayView2<'_, f64>,
    choice: &EstimatorChoice,
    tables: &CalibrationTables,
    config: &ResamplingConfig,
) -> Result<TestResult> {
    let stat = |s: &[Hypersphere]| overlap(&s[0], &s[1]);
    bca_pair_test(TestKind::Overlap, points_i, points_j, choice, tables, config, &stat).map(|(r, _)| r)
}

/// Two-sided BCa test of `r_i - r_j` against 0.
pub fn radius_diff_test(
    points_i: ArrayView2<'_, f64>,
    points_j: ArrayView2<'_, f64>,
    choice: &EstimatorChoice,
    tables: &CalibrationTables,
    config: &ResamplingConfig,
) -> Result<TestResult> {
    let stat = |s: &[Hypersphere]| s[0].radius - s[1].radius;
    bca_pair_test(TestKind::RadiusDiff, points_i, points_j, choice, tables, config, &stat).map(|(r, _)| r)
}

/// Distinct classes of the two pairs, in first-appearance order, and the
/// positions of each pair's classes within that list.
fn involved(pair_a: (usize, usize), pair_b: (usize, usize)) -> (Vec<usize>, [usize; 4]) {
    let mut list: Vec<usize> = Vec::new();
    let mut pos = [0; 4];
    for (slot, c) in [pair_a.0, pair_a.1, pair_b.0, pair_b.1].into_iter().enumerate() {
        pos[slot] = match list.iter().position(|&x| x == c) {
            Some(p) => p,
            None => {
                list.push(c);
                list.len() - 1
            }
        };
    }
    (list, pos)
}

fn diff_test(
    kind: TestKind,
    classes: &[ArrayView2<'_, f64>],
    pair_a: (usize, usize),
    pair_b: (usize, usize),
    choice: &EstimatorChoice,
    tables: &CalibrationTables,
    config: &ResamplingConfig,
    pair_stat: fn(&Hypersphere, &Hypersphere) -> f64,
) -> Result<(TestResult, Vec<f64>)> {
    config.validate()?;
    for &(i, j) in [&pair_a, &pair_b] {
        if i == j || i >= classes.len() || j >= classes.len() {
            return Err(Error::InvalidArgument(format!("invalid class pair ({i}, {j})")));
        }
    }
    let norm = |(i, j): (usize, usize)| (i.min(j), i.max(j));
    if norm(pair_a) == norm(pair_b) {
        return Err(Error::InvalidArgument("the two pairs must differ".into()));
    }
    let (list, pos) = involved(pair_a, pair_b);
    let views: Vec<ArrayView2<'_, f64>> = list.iter().map(|&c| classes[c]).collect();
    for v in &views[1..] {
        check_pair(views[0], *v)?;
    }
    let mut warnings = Vec::new();
    if list.len() != 3 {
        warnings.push(format!(
            "pairs {pair_a:?} and {pair_b:?} do not share exactly one class; calibration of this shape is unvalidated"
        ));
    }
    let rs = Resampler { classes: views, choice, tables };
    let stat = move |s: &[Hypersphere]| pair_stat(&s[pos[0]], &s[pos[1]]) - pair_stat(&s[pos[2]], &s[pos[3]]);
    let observed = stat(&rs.full()?);
    let boot = rs.bootstrap(config, &stat)?;
    let ci = percentile_test(&boot, config.alpha_level)?;
    Ok((result(kind, observed, ci, config, warnings), boot))
}

fn center_distance(a: &Hypersphere, b: &Hypersphere) -> f64 {
    euclidean(&a.center, &b.center)
}

/// Two-sided percentile-bootstrap test of `d(pair_a) - d(pair_b)` against 0.
/// `pair_a` and `pair_b` index into `classes`.
pub fn separation_diff_test(
    classes: &[ArrayView2<'_, f64>],
    pair_a: (usize, usize),
    pair_b: (usize, usize),
    choice: &EstimatorChoice,
    tables: &CalibrationTables,
    config: &ResamplingConfig,
) -> Result<TestResult> {
    diff_test(TestKind::SeparationDiff, classes, pair_a, pair_b, choice, tables, config, center_distance)
        .map(|(r, _)| r)
}

/// Two-sided percentile-bootstrap test of `overlap(pair_a) - overlap(pair_b)`
/// against 0.
pub fn overlap_diff_test(
    classes: &[ArrayView2<'_, f64>],
    pair_a: (usize, usize),
    pair_b: (usize, usize),
    choice: &EstimatorChoice,
    tables: &CalibrationTables,
    config: &ResamplingConfig,
) -> Result<TestResult> {
    diff_test(TestKind::OverlapDiff, classes, pair_a, pair_b, choice, tables, config, overlap).map(|(r, _)| r)
}

/// Runs the bootstrap test of `kind` and also returns its resample
/// distribution. Pair tests use `classes[0]` and `classes[1]`.
pub(crate) fn run_with_resamples(
    kind: TestKind,
    classes: &[ArrayView2<'_, f64>],
    pair_a: (usize, usize),
    pair_b: (usize, usize),
    choice: &EstimatorChoice,
    tables: &CalibrationTables,
    config: &ResamplingConfig,
) -> Result<(TestResult, Vec<f64>)> {
    match kind {
        TestKind::Separation => super::separation::separation_test_with_resamples(classes[0], classes[1], config),
        TestKind::Overlap => {
            let stat = |s: &[Hypersphere]| overlap(&s[0], &s[1]);
            bca_pair_test(kind, classes[0], classes[1], choice, tables, config, &stat)
        }
        TestKind::RadiusDiff => {
            let stat = |s: &[Hypersphere]| s[0].radius - s[1].radius;
            bca_pair_test(kind, classes[0], classes[1], choice, tables, config, &stat)
        }
        TestKind::SeparationDiff => {
            diff_test(kind, classes, pair_a, pair_b, choice, tables, config, center_distance)
        }
        TestKind::OverlapDiff => diff_test(kind, classes, pair_a, pair_b, choice, tables, config, overlap),
    }
}
