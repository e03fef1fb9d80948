//! Per-class hypersphere fits and the ensemble-level entry point.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mcmc::{self, mcmc_fit};
use super::meb::fit_ml_ball;
use super::radius::{self, d2c_of_rows, mean_of_rows, mean_pairwise_distance_rows};
use super::tables::CalibrationTables;
use crate::error::{Error, Result};
use crate::geometry::{
    summary_stats, DistanceDataset, Hypersphere, HypersphereEnsemble, LabeledDataset, SummaryStats,
};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "UPPERCASE")]
pub enum EstimatorKind {
    Ml,
    Mcmc,
    Dcb1,
    Dcg,
    Dcc,
    Dcb2,
    #[default]
    Adaptive,
    Dist,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 8] = [
        EstimatorKind::Ml,
        EstimatorKind::Mcmc,
        EstimatorKind::Dcb1,
        EstimatorKind::Dcg,
        EstimatorKind::Dcc,
        EstimatorKind::Dcb2,
        EstimatorKind::Adaptive,
        EstimatorKind::Dist,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Ml => "ML",
            EstimatorKind::Mcmc => "MCMC",
            EstimatorKind::Dcb1 => "DCB1",
            EstimatorKind::Dcg => "DCG",
            EstimatorKind::Dcc => "DCC",
            EstimatorKind::Dcb2 => "DCB2",
            EstimatorKind::Adaptive => "ADAPTIVE",
            EstimatorKind::Dist => "DIST",
        }
    }

    /// Whether the estimator can run on a distance matrix alone.
    pub fn supports_distances(self) -> bool {
        self == EstimatorKind::Dist
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        Self::ALL
            .into_iter()
            .find(|k| k.name() == upper)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown estimator `{s}`")))
    }
}

fn default_mcmc_samples() -> usize {
    mcmc::DEFAULT_SAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorChoice {
    pub kind: EstimatorKind,
    #[serde(default = "default_mcmc_samples")]
    pub mcmc_samples: usize,
    /// Seed for the MCMC sampler; ignored by the other estimators.
    #[serde(default)]
    pub seed: u64,
}

impl Default for EstimatorChoice {
    fn default() -> Self {
        Self::new(EstimatorKind::default())
    }
}

impl EstimatorChoice {
    pub fn new(kind: EstimatorKind) -> Self {
        Self { kind, mcmc_samples: mcmc::DEFAULT_SAMPLES, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mcmc_samples == 0 {
            return Err(Error::InvalidArgument("mcmc_samples must be positive".into()));
        }
        Ok(())
    }
}

fn gather(points: ArrayView2<'_, f64>, rows: &[usize]) -> Array2<f64> {
    Array2::from_shape_fn((rows.len(), points.ncols()), |(i, j)| points[[rows[i], j]])
}

/// Fits one class from the selected rows of `points` (rows may repeat, as in
/// bootstrap resamples).
pub fn fit_rows(
    points: ArrayView2<'_, f64>,
    rows: &[usize],
    choice: &EstimatorChoice,
    tables: &CalibrationTables,
) -> Result<Hypersphere> {
    if rows.len() < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 points, got {}", rows.len())));
    }
    let n = points.ncols();
    match choice.kind {
        EstimatorKind::Ml => {
            let sub = gather(points, rows);
            fit_ml_ball(sub.view())
        }
        EstimatorKind::Mcmc => {
            let sub = gather(points, rows);
            mcmc_fit(sub.view(), choice.mcmc_samples, choice.seed).map(|(_, h)| h)
        }
        kind => {
            let center = mean_of_rows(points, rows);
            let r = match kind {
                EstimatorKind::Dist => {
                    mean_pairwise_distance_rows(points, rows) / tables.inv_zeta(n)
                }
                _ => {
                    let d = d2c_of_rows(points, rows, &center);
                    match kind {
                        EstimatorKind::Dcb1 => radius::dcb1_from_d2c(&d, n),
                        EstimatorKind::Dcg => radius::dcg_from_d2c(&d, n),
                        EstimatorKind::Dcc => radius::dcc_from_d2c(&d),
                        EstimatorKind::Dcb2 => radius::dcb2_from_d2c(&d, n, tables),
                        _ => radius::adaptive_from_d2c(&d, n, tables),
                    }
                }
            };
            Hypersphere::new(center, r)
        }
    }
}

/// Fits one class: ML and MCMC supply their own centers, every other
/// estimator uses the mean.
pub fn fit_class(
    points: ArrayView2<'_, f64>,
    choice: &EstimatorChoice,
    tables: &CalibrationTables,
) -> Result<Hypersphere> {
    let rows: Vec<usize> = (0..points.nrows()).collect();
    fit_rows(points, &rows, choice, tables)
}

#[derive(Debug, Clone, Copy)]
pub enum DatasetRef<'a> {
    Points(&'a LabeledDataset),
    Distances(&'a DistanceDataset),
}

impl<'a> From<&'a LabeledDataset> for DatasetRef<'a> {
    fn from(d: &'a LabeledDataset) -> Self {
        DatasetRef::Points(d)
    }
}

impl<'a> From<&'a DistanceDataset> for DatasetRef<'a> {
    fn from(d: &'a DistanceDataset) -> Self {
        DatasetRef::Distances(d)
    }
}

/// Output of [`fit_ensemble`]. `ensemble` is absent in distance mode, where
/// no coordinates exist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub labels: Vec<String>,
    pub dim: usize,
    pub estimator: EstimatorChoice,
    pub ensemble: Option<HypersphereEnsemble>,
    pub stats: SummaryStats,
}

pub fn fit_ensemble(
    dataset: DatasetRef<'_>,
    choice: &EstimatorChoice,
    tables: &CalibrationTables,
) -> Result<FittedModel> {
    choice.validate()?;
    match dataset {
        DatasetRef::Points(ds) => {
            let spheres = ds
                .classes()
                .par_iter()
                .enumerate()
                .map(|(i, class)| {
                    let mut c = choice.clone();
                    c.seed = seed::derive(choice.seed, &[i as u64]);
                    fit_class(class.points.view(), &c, tables)
                })
                .collect::<Result<Vec<_>>>()?;
            let ensemble = HypersphereEnsemble::new(ds.labels(), spheres)?;
            let stats = summary_stats(&ensemble);
            Ok(FittedModel {
                labels: ds.labels(),
                dim: ds.dim(),
                estimator: choice.clone(),
                ensemble: Some(ensemble),
                stats,
            })
        }
        DatasetRef::Distances(ds) => {
            if !choice.kind.supports_distances() {
                return Err(Error::RequiresPoints(choice.kind.to_string()));
            }
            let labels = ds.class_labels();
            let idx: Vec<Vec<usize>> = labels.iter().map(|l| ds.class_indices(l)).collect();
            let (radii, distances) = distance_mode_stats(ds.distances().view(), &idx, ds.dim(), tables);
            let stats = SummaryStats::from_parts(radii, distances)?;
            Ok(FittedModel { labels, dim: ds.dim(), estimator: choice.clone(), ensemble: None, stats })
        }
    }
}

fn block_mean(d: ArrayView2<'_, f64>, a: &[usize], b: &[usize], f: impl Fn(f64) -> f64) -> f64 {
    let mut s = 0.0;
    for &i in a {
        for &j in b {
            s += f(d[[i, j]]);
        }
    }
    s / (a.len() * b.len()) as f64
}

/// Radii and center distances from a labeled distance matrix.
///
/// With `W_i` the mean squared distance over all ordered pairs of class `i`
/// (self-pairs included) and `B_ij` the mean cross-class squared distance,
/// the squared distance between class means is exactly
/// `B_ij - (W_i + W_j) / 2` for Euclidean distances.
pub(crate) fn distance_mode_stats(
    d: ArrayView2<'_, f64>,
    idx: &[Vec<usize>],
    dim: usize,
    tables: &CalibrationTables,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let t = idx.len();
    let sq = |x: f64| x * x;
    let within: Vec<f64> = idx.iter().map(|a| block_mean(d, a, a, sq)).collect();
    let radii = idx
        .iter()
        .map(|a| {
            let p = a.len();
            let total = block_mean(d, a, a, |x| x) * (p * p) as f64;
            total / (p * (p - 1)) as f64 / tables.inv_zeta(dim)
        })
        .collect();
    let mut dist = vec![vec![0.0; t]; t];
    for i in 0..t {
        for j in 0..i {
            let b = block_mean(d, &idx[i], &idx[j], sq);
            let v = (b - 0.5 * (within[i] + within[j])).max(0.0).sqrt();
            dist[i][j] = v;
            dist[j][i] = v;
        }
    }
    (radii, dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LabeledClass;
    use crate::synthetic::sampling::{sample_ball, sample_gaussian};
    use ndarray::{concatenate, Axis};

    fn two_class(a: Array2<f64>, b: Array2<f64>) -> LabeledDataset {
        LabeledDataset::new(vec![
            LabeledClass { label: "a".into(), points: a },
            LabeledClass { label: "b".into(), points: b },
        ])
        .unwrap()
    }

    fn pairwise(points: ArrayView2<'_, f64>) -> Array2<f64> {
        let p = points.nrows();
        Array2::from_shape_fn((p, p), |(i, j)| {
            crate::geometry::euclidean(
                points.row(i).as_slice().unwrap(),
                points.row(j).as_slice().unwrap(),
            )
        })
    }

    #[test]
    fn kind_names_round_trip() {
        for k in EstimatorKind::ALL {
            assert_eq!(k.to_string().parse::<EstimatorKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{}\"", k.name()));
        }
        assert_eq!("adaptive".parse::<EstimatorKind>().unwrap(), EstimatorKind::Adaptive);
        assert!("median".parse::<EstimatorKind>().is_err());
        assert_eq!(EstimatorChoice::default().mcmc_samples, 10_000);
    }

    #[test]
    fn identical_clouds_give_zero_distance() {
        let pts = sample_ball(5, 40, &[0.0; 5], 1.0, 1);
        let model =
            fit_ensemble((&two_class(pts.clone(), pts)).into(), &EstimatorChoice::default(), &CalibrationTables::default())
                .unwrap();
        assert_eq!(model.stats.distance(0, 1), 0.0);
        assert_eq!(model.stats.radius(0), model.stats.radius(1));
    }

    #[test]
    fn touching_balls_margin_near_zero() {
        let n = 200;
        let mut c2 = vec![0.0; n];
        c2[0] = 2.0;
        let ds = two_class(sample_ball(n, 100, &vec![0.0; n], 1.0, 3), sample_ball(n, 100, &c2, 1.0, 4));
        let m = fit_ensemble((&ds).into(), &EstimatorChoice::default(), &CalibrationTables::default()).unwrap();
        assert!(m.stats.margin(0, 1).abs() <= 0.15);
    }

    #[test]
    fn distance_mode_matches_point_mode_centers() {
        let n = 200;
        let mut c2 = vec![0.0; n];
        c2[0] = 3.0;
        let a = sample_gaussian(n, 100, &vec![0.0; n], 1.0, 7);
        let b = sample_gaussian(n, 100, &c2, 1.0, 8);
        let ds = two_class(a.clone(), b.clone());
        let point = fit_ensemble((&ds).into(), &EstimatorChoice::default(), &CalibrationTables::default()).unwrap();
        let all = concatenate(Axis(0), &[a.view(), b.view()]).unwrap();
        let labels = (0..200).map(|i| if i < 100 { "a" } else { "b" }.to_string()).collect();
        let dd = DistanceDataset::new(labels, pairwise(all.view()), n).unwrap();
        let dist = fit_ensemble(
            (&dd).into(),
            &EstimatorChoice::new(EstimatorKind::Dist),
            &CalibrationTables::default(),
        )
        .unwrap();
        assert!(dist.ensemble.is_none());
        let (dp, dd) = (point.stats.distance(0, 1), dist.stats.distance(0, 1));
        // the identity is exact for the class means
        assert!((dp - dd).abs() <= 1e-8 * dp, "{dp} vs {dd}");
    }

    #[test]
    fn distance_mode_rejects_point_estimators() {
        let dd = DistanceDataset::new(
            vec!["a".into(), "a".into()],
            ndarray::array![[0.0, 1.0], [1.0, 0.0]],
            2,
        )
        .unwrap();
        for k in EstimatorKind::ALL.into_iter().filter(|k| *k != EstimatorKind::Dist) {
            let err = fit_ensemble((&dd).into(), &EstimatorChoice::new(k), &CalibrationTables::default());
            assert!(matches!(err, Err(Error::RequiresPoints(_))), "{k}");
        }
    }

    #[test]
    fn ml_radius_not_above_dcb1() {
        let t = CalibrationTables::default();
        for s in 0..20 {
            let pts = sample_ball(3, 50, &[0.0; 3], 1.0, s);
            let ml = fit_class(pts.view(), &EstimatorChoice::new(EstimatorKind::Ml), &t).unwrap();
            let dcb1 = fit_class(pts.view(), &EstimatorChoice::new(EstimatorKind::Dcb1), &t).unwrap();
            assert!(ml.radius <= dcb1.radius);
        }
    }

    #[test]
    fn fit_rows_matches_gathered_fit() {
        let t = CalibrationTables::default();
        let pts = sample_ball(4, 30, &[0.0; 4], 1.0, 6);
        let rows = vec![0, 0, 3, 5, 7, 7, 7, 12, 29];
        let sub = gather(pts.view(), &rows);
        for k in [EstimatorKind::Adaptive, EstimatorKind::Dcg, EstimatorKind::Dist, EstimatorKind::Ml] {
            let c = EstimatorChoice::new(k);
            let a = fit_rows(pts.view(), &rows, &c, &t).unwrap();
            let b = fit_class(sub.view(), &c, &t).unwrap();
            assert!((a.radius - b.radius).abs() < 1e-12, "{k}");
        }
    }

    #[test]
    fn degenerate_class_all_estimators() {
        let t = CalibrationTables::default();
        let pts = ndarray::array![[1.0, -1.0], [1.0, -1.0], [1.0, -1.0]];
        for k in EstimatorKind::ALL {
            let mut c = EstimatorChoice::new(k);
            c.mcmc_samples = 200;
            let h = fit_class(pts.view(), &c, &t).unwrap();
            assert_eq!(h.radius, 0.0, "{k}");
            assert_eq!(h.center, vec![1.0, -1.0], "{k}");
        }
    }
}
