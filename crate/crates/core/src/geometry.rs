//! Datasets, hyperspheres and the summary statistics that connect them to
//! their visualization: radii, center distances and margins.
//!
//! All lengths are in the units of the original data space. A margin is the
//! center distance minus both radii; an overlap is the negated margin.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One labeled point cloud, `P × N` with one point per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledClass {
    pub label: String,
    pub points: Array2<f64>,
}

/// Per-class point clouds sharing a dimension `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DatasetRepr", into = "DatasetRepr")]
pub struct LabeledDataset {
    classes: Vec<LabeledClass>,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct ClassRepr {
    label: String,
    points: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct DatasetRepr {
    classes: Vec<ClassRepr>,
}

impl TryFrom<DatasetRepr> for LabeledDataset {
    type Error = Error;

    fn try_from(repr: DatasetRepr) -> Result<Self> {
        let classes = repr
            .classes
            .into_iter()
            .map(|c| {
                let points = rows_to_array(&c.points).map_err(|e| {
                    Error::InvalidDataset(format!("class `{}`: {e}", c.label))
                })?;
                Ok(LabeledClass {
                    label: c.label,
                    points,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        LabeledDataset::new(classes)
    }
}

impl From<LabeledDataset> for DatasetRepr {
    fn from(ds: LabeledDataset) -> Self {
        DatasetRepr {
            classes: ds
                .classes
                .into_iter()
                .map(|c| ClassRepr {
                    label: c.label,
                    points: c.points.outer_iter().map(|r| r.to_vec()).collect(),
                })
                .collect(),
        }
    }
}

/// Builds a `P × N` array from row vectors, rejecting ragged input.
pub fn rows_to_array(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let n = rows.first().map_or(0, Vec::len);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::InvalidDataset(format!(
            "row {i} has {} coordinates, expected {n}",
            r.len()
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((rows.len(), n), flat)
        .map_err(|e| Error::InvalidDataset(e.to_string()))
}

impl LabeledDataset {
    /// Validates that every class has at least two finite points, that labels
    /// are unique and that all classes share one dimension.
    pub fn new(classes: Vec<LabeledClass>) -> Result<Self> {
        let first = classes
            .first()
            .ok_or(Error::Empty("dataset has no classes"))?;
        let dim = first.points.ncols();
        if dim == 0 {
            return Err(Error::InvalidDataset("dimension must be positive".into()));
        }
        for (i, class) in classes.iter().enumerate() {
            if class.points.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: class.points.ncols(),
                });
            }
            if class.points.nrows() < 2 {
                return Err(Error::ClassTooSmall {
                    label: class.label.clone(),
                    found: class.points.nrows(),
                    required: 2,
                });
            }
            if class.points.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("dataset points"));
            }
            if classes[..i].iter().any(|c| c.label == class.label) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate label `{}`",
                    class.label
                )));
            }
        }
        Ok(Self { classes, dim })
    }

    pub fn classes(&self) -> &[LabeledClass] {
        &self.classes
    }

    pub fn class(&self, i: usize) -> &LabeledClass {
        &self.classes[i]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.label.clone()).collect()
    }

    pub fn views(&self) -> Vec<ArrayView2<'_, f64>> {
        self.classes.iter().map(|c| c.points.view()).collect()
    }
}

/// Pairwise distances between labeled points, with no coordinates.
///
/// `dim` is the dimension of the space the distances were measured in; the
/// pairwise-distance radius estimator needs it.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceDataset {
    labels: Vec<String>,
    distances: Array2<f64>,
    dim: usize,
}

impl DistanceDataset {
    /// `distances` must be square, symmetric, nonnegative and zero on the
    /// diagonal (exactly; callers symmetrize small asymmetries beforehand).
    pub fn new(labels: Vec<String>, distances: Array2<f64>, dim: usize) -> Result<Self> {
        let p = labels.len();
        if p == 0 {
            return Err(Error::Empty("distance dataset has no points"));
        }
        if distances.nrows() != p || distances.ncols() != p {
            return Err(Error::InvalidDataset(format!(
                "distance matrix is {}x{} but there are {p} labels",
                distances.nrows(),
                distances.ncols()
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidDataset("dimension must be positive".into()));
        }
        for i in 0..p {
            if distances[[i, i]] != 0.0 {
                return Err(Error::InvalidDataset(format!(
                    "diagonal entry {i} is {} (must be 0)",
                    distances[[i, i]]
                )));
            }
            for j in 0..i {
                let d = distances[[i, j]];
                if !d.is_finite() {
                    return Err(Error::NonFinite("distance matrix"));
                }
                if d < 0.0 {
                    return Err(Error::InvalidDataset(format!(
                        "negative distance {d} at ({i}, {j})"
                    )));
                }
                if d != distances[[j, i]] {
                    return Err(Error::InvalidDataset(format!(
                        "distance matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let ds = Self {
            labels,
            distances,
            dim,
        };
        for label in ds.class_labels() {
            let found = ds.class_indices(&label).len();
            if found < 2 {
                return Err(Error::ClassTooSmall {
                    label,
                    found,
                    required: 2,
                });
            }
        }
        Ok(ds)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn distances(&self) -> &Array2<f64> {
        &self.distances
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Distinct class labels in order of first appearance.
    pub fn class_labels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for l in &self.labels {
            if !out.contains(l) {
                out.push(l.clone());
            }
        }
        out
    }

    pub fn class_indices(&self, label: &str) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| l.as_str() == label)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypersphere {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Hypersphere {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.iter().any(|x| !x.is_finite()) || !radius.is_finite() {
            return Err(Error::NonFinite("hypersphere"));
        }
        if radius < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "negative radius {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }
}

/// One fitted hypersphere per class, aligned with the class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypersphereEnsemble {
    labels: Vec<String>,
    spheres: Vec<Hypersphere>,
}

impl HypersphereEnsemble {
    pub fn new(labels: Vec<String>, spheres: Vec<Hypersphere>) -> Result<Self> {
        if spheres.is_empty() {
            return Err(Error::Empty("ensemble has no spheres"));
        }
        if labels.len() != spheres.len() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} spheres",
                labels.len(),
                spheres.len()
            )));
        }
        let dim = spheres[0].dim();
        if let Some(s) = spheres.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: s.dim(),
            });
        }
        Ok(Self { labels, spheres })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn spheres(&self) -> &[Hypersphere] {
        &self.spheres
    }

    pub fn len(&self) -> usize {
        self.spheres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spheres.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.spheres[0].dim()
    }
}

/// Radii, center distances and margins of `T` spheres.
///
/// Distance and margin matrices are stored in full (`T × T`, symmetric, zero
/// diagonal). Margins are always recomputed from the distances and radii, so
/// `m[i][j] + r[i] + r[j] == d[i][j]` holds by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StatsRepr")]
pub struct SummaryStats {
    radii: Vec<f64>,
    distances: Vec<Vec<f64>>,
    margins: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct StatsRepr {
    radii: Vec<f64>,
    distances: Vec<Vec<f64>>,
}

impl TryFrom<StatsRepr> for SummaryStats {
    type Error = Error;

    fn try_from(r: StatsRepr) -> Result<Self> {
        SummaryStats::from_parts(r.radii, r.distances)
    }
}

/// Relative asymmetry tolerated (and averaged away) in distance matrices.
const SYMMETRY_TOL: f64 = 1e-9;

impl SummaryStats {
    pub fn from_parts(radii: Vec<f64>, distances: Vec<Vec<f64>>) -> Result<Self> {
        let t = radii.len();
        if t == 0 {
            return Err(Error::Empty("summary statistics need at least one radius"));
        }
        if radii.iter().any(|r| !r.is_finite()) {
            return Err(Error::NonFinite("radii"));
        }
        if let Some(r) = radii.iter().find(|&&r| r < 0.0) {
            return Err(Error::InvalidArgument(format!("negative radius {r}")));
        }
        if distances.len() != t || distances.iter().any(|row| row.len() != t) {
            return Err(Error::InvalidArgument(format!(
                "distance matrix must be {t}x{t}"
            )));
        }
        let scale = distances
            .iter()
            .flatten()
            .fold(0.0_f64, |a, &b| a.max(b.abs()));
        let mut d = vec![vec![0.0; t]; t];
        for i in 0..t {
            for j in 0..i {
                let (a, b) = (distances[i][j], distances[j][i]);
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::NonFinite("distances"));
                }
                if (a - b).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::InvalidArgument(format!(
                        "distance matrix is not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
                let v = if a == b { a } else { 0.5 * (a + b) };
                if v < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "negative distance {v} at ({i}, {j})"
                    )));
                }
                d[i][j] = v;
                d[j][i] = v;
            }
        }
        let margins = (0..t)
            .map(|i| {
                (0..t)
                    .map(|j| if i == j { 0.0 } else { d[i][j] - radii[i] - radii[j] })
                    .collect()
            })
            .collect();
        Ok(Self {
            radii,
            distances: d,
            margins,
        })
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn distances(&self) -> &[Vec<f64>] {
        &self.distances
    }

    pub fn margins(&self) -> &[Vec<f64>] {
        &self.margins
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.radii[i]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distances[i][j]
    }

    pub fn margin(&self, i: usize, j: usize) -> f64 {
        self.margins[i][j]
    }

    pub fn overlap(&self, i: usize, j: usize) -> f64 {
        -self.margins[i][j]
    }

    /// Upper-triangle pairs `(i, j)` with `i < j`, in row-major order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        pairs(self.len())
    }

    /// Mean center distance over all pairs, or the mean radius when there is a
    /// single sphere. Falls back to 1 for an all-zero configuration.
    pub fn length_scale(&self) -> f64 {
        let t = self.len();
        let s = if t >= 2 {
            let p = self.pairs();
            p.iter().map(|&(i, j)| self.distances[i][j]).sum::<f64>() / p.len() as f64
        } else {
            self.radii[0]
        };
        if s > 0.0 && s.is_finite() {
            s
        } else {
            1.0
        }
    }
}

pub fn pairs(t: usize) -> Vec<(usize, usize)> {
    (0..t)
        .flat_map(|i| (i + 1..t).map(move |j| (i, j)))
        .collect()
}

/// Euclidean distance between two equal-length vectors.
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Distance of every point to `center`.
pub fn d2c(points: ArrayView2<'_, f64>, center: &[f64]) -> Result<Vec<f64>> {
    if points.ncols() != center.len() {
        return Err(Error::DimensionMismatch {
            expected: center.len(),
            found: points.ncols(),
        });
    }
    Ok(points
        .outer_iter()
        .map(|row| {
            row.iter()
                .zip(center)
                .map(|(x, c)| (x - c) * (x - c))
                .sum::<f64>()
                .sqrt()
        })
        .collect())
}

pub fn summary_stats(ensemble: &HypersphereEnsemble) -> SummaryStats {
    let s = ensemble.spheres();
    let t = s.len();
    let mut d = vec![vec![0.0; t]; t];
    for i in 0..t {
        for j in 0..i {
            let v = euclidean(&s[i].center, &s[j].center);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    let radii = s.iter().map(|h| h.radius).collect();
    SummaryStats::from_parts(radii, d).expect("ensemble spheres are validated")
}
