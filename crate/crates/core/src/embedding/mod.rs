//! Low-dimensional sphere embedding.
//!
//! Finds `n`-dimensional centers and radii (`n` = 2 or 3) whose radii,
//! center distances and margins match target summary statistics in the
//! least-squares sense:
//!
//! ```text
//! E = sum_{i<j} (d~ - d^)^2 + alpha * sum_{i<j} (m~ - m^)^2 + beta * sum_i (r~ - r^)^2
//! ```
//!
//! Centers start from metric MDS on the target distances and radii from the
//! targets; a projected quasi-Newton descent keeps radii nonnegative.

pub mod mds;
pub mod optimize;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SummaryStats;

pub use mds::mds_init;
pub use optimize::{descend, mds_only_embedding, optimize, Descent, Termination, MULTI_STARTS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 1.0 }
    }
}

impl ObjectiveWeights {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let w = Self { alpha, beta };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite() && self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "weights must be finite and nonnegative (alpha {}, beta {})",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

/// Centers (`T × n`) and radii of a candidate embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingState {
    pub centers: Array2<f64>,
    pub radii: Vec<f64>,
}

impl EmbeddingState {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.centers.ncols()
    }

    /// Flattened parameters: row-major centers followed by radii.
    pub(crate) fn to_params(&self) -> Vec<f64> {
        self.centers.iter().copied().chain(self.radii.iter().copied()).collect()
    }

    pub(crate) fn from_params(x: &[f64], t: usize, n: usize) -> Self {
        let centers = Array2::from_shape_vec((t, n), x[..t * n].to_vec()).expect("shape");
        Self { centers, radii: x[t * n..].to_vec() }
    }

    pub fn stats(&self) -> SummaryStats {
        let t = self.len();
        let mut d = vec![vec![0.0; t]; t];
        for i in 0..t {
            for j in 0..i {
                let v = crate::geometry::euclidean(
                    self.centers.row(i).as_slice().expect("standard layout"),
                    self.centers.row(j).as_slice().expect("standard layout"),
                );
                d[i][j] = v;
                d[j][i] = v;
            }
        }
        SummaryStats::from_parts(self.radii.clone(), d).expect("finite embedding")
    }
}

fn check(state: &EmbeddingState, target: &SummaryStats) {
    assert_eq!(state.len(), target.len(), "embedding and target sizes differ");
    assert_eq!(state.centers.nrows(), state.len(), "centers and radii sizes differ");
}

/// Objective value and, when `grad` is given, its gradient, on flattened
/// parameters (see [`EmbeddingState::to_params`]).
pub(crate) fn eval(
    x: &[f64],
    t: usize,
    n: usize,
    target: &SummaryStats,
    w: &ObjectiveWeights,
    mut grad: Option<&mut [f64]>,
) -> f64 {
    let (c, r) = x.split_at(t * n);
    if let Some(g) = grad.as_deref_mut() {
        g.iter_mut().for_each(|v| *v = 0.0);
    }
    let mut e = 0.0;
    for i in 0..t {
        let dr = r[i] - target.radius(i);
        e += w.beta * dr * dr;
        if let Some(g) = grad.as_deref_mut() {
            g[t * n + i] += 2.0 * w.beta * dr;
        }
    }
    for i in 0..t {
        for j in i + 1..t {
            let ci = &c[i * n..(i + 1) * n];
            let cj = &c[j * n..(j + 1) * n];
            let d = crate::geometry::euclidean(ci, cj);
            let dd = d - target.distance(i, j);
            let dm = (d - r[i] - r[j]) - target.margin(i, j);
            e += dd * dd + w.alpha * dm * dm;
            if let Some(g) = grad.as_deref_mut() {
                g[t * n + i] -= 2.0 * w.alpha * dm;
                g[t * n + j] -= 2.0 * w.alpha * dm;
                let coef = 2.0 * dd + 2.0 * w.alpha * dm;
                if d > 0.0 {
                    for k in 0..n {
                        let u = (ci[k] - cj[k]) / d;
                        g[i * n + k] += coef * u;
                        g[j * n + k] -= coef * u;
                    }
                } else {
                    // coincident centers: push apart along the first axis
                    g[i * n] += coef;
                    g[j * n] -= coef;
                }
            }
        }
    }
    e
}

pub fn objective(state: &EmbeddingState, target: &SummaryStats, weights: &ObjectiveWeights) -> f64 {
    check(state, target);
    eval(&state.to_params(), state.len(), state.dim(), target, weights, None)
}

/// Gradient of [`objective`] with respect to every center coordinate and
/// radius, returned in the same shape as the state.
pub fn gradient(
    state: &EmbeddingState,
    target: &SummaryStats,
    weights: &ObjectiveWeights,
) -> EmbeddingState {
    check(state, target);
    let (t, n) = (state.len(), state.dim());
    let mut g = vec![0.0; t * n + t];
    eval(&state.to_params(), t, n, target, weights, Some(&mut g));
    EmbeddingState::from_params(&g, t, n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairError {
    pub i: usize,
    pub j: usize,
    pub target: f64,
    pub achieved: f64,
    /// `achieved - target`.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusError {
    pub i: usize,
    pub target: f64,
    pub achieved: f64,
    pub error: f64,
}

/// Per-statistic deviations of an embedding from its targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub distances: Vec<PairError>,
    pub margins: Vec<PairError>,
    pub radii: Vec<RadiusError>,
    /// Largest `|error| / max(|target|, 1e-9 * scale)` over all statistics.
    pub max_relative_error: f64,
}

impl ErrorReport {
    pub fn new(target: &SummaryStats, achieved: &SummaryStats) -> Self {
        let scale = target.length_scale();
        let floor = 1e-9 * scale;
        let rel = |e: f64, t: f64| e.abs() / t.abs().max(floor);
        let mut max_rel = 0.0f64;
        let mut distances = Vec::new();
        let mut margins = Vec::new();
        for (i, j) in target.pairs() {
            let (t, a) = (target.distance(i, j), achieved.distance(i, j));
            max_rel = max_rel.max(rel(a - t, t));
            distances.push(PairError { i, j, target: t, achieved: a, error: a - t });
            let (t, a) = (target.margin(i, j), achieved.margin(i, j));
            max_rel = max_rel.max(rel(a - t, t));
            margins.push(PairError { i, j, target: t, achieved: a, error: a - t });
        }
        let radii = (0..target.len())
            .map(|i| {
                let (t, a) = (target.radius(i), achieved.radius(i));
                max_rel = max_rel.max(rel(a - t, t));
                RadiusError { i, target: t, achieved: a, error: a - t }
            })
            .collect();
        Self { distances, margins, radii, max_relative_error: max_rel }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingMethod {
    Optimized,
    MdsOnly,
}

/// A fitted low-dimensional embedding together with its targets and errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub labels: Vec<String>,
    pub n: usize,
    pub centers: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    pub achieved: SummaryStats,
    pub target: SummaryStats,
    pub weights: ObjectiveWeights,
    pub errors: ErrorReport,
    pub objective: f64,
    pub method: EmbeddingMethod,
    pub termination: Termination,
    pub iterations: usize,
    pub converged: bool,
}

impl Embedding {
    pub(crate) fn assemble(
        state: EmbeddingState,
        target: &SummaryStats,
        weights: ObjectiveWeights,
        method: EmbeddingMethod,
        termination: Termination,
        iterations: usize,
    ) -> Self {
        let achieved = state.stats();
        let objective = objective(&state, target, &weights);
        let errors = ErrorReport::new(target, &achieved);
        let t = state.len();
        Self {
            labels: (0..t).map(|i| i.to_string()).collect(),
            n: state.dim(),
            centers: state.centers.outer_iter().map(|r| r.to_vec()).collect(),
            radii: state.radii,
            achieved,
            target: target.clone(),
            weights,
            errors,
            objective,
            method,
            converged: termination.is_converged(),
            termination,
            iterations,
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.radii.len() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} spheres",
                labels.len(),
                self.radii.len()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn state(&self) -> EmbeddingState {
        let t = self.radii.len();
        let centers = Array2::from_shape_fn((t, self.n), |(i, k)| self.centers[i][k]);
        EmbeddingState { centers, radii: self.radii.clone() }
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Length scale used by the stopping rules: the mean target distance.
    pub fn scale(&self) -> f64 {
        self.target.length_scale()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use ndarray::array;
    use rand::Rng;

    fn stats(radii: Vec<f64>, d: Vec<Vec<f64>>) -> SummaryStats {
        SummaryStats::from_parts(radii, d).unwrap()
    }

    #[test]
    fn zero_at_target_configuration() {
        let state = EmbeddingState {
            centers: array![[0.0, 0.0], [3.0, 4.0], [-1.0, 2.0]],
            radii: vec![1.0, 2.0, 0.5],
        };
        let target = state.stats();
        let w = ObjectiveWeights::new(0.7, 2.0).unwrap();
        assert_eq!(objective(&state, &target, &w), 0.0);
        let g = gradient(&state, &target, &w);
        assert!(g.centers.iter().chain(&g.radii).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn single_pair_distance_error() {
        let target = stats(vec![1.0, 1.0], vec![vec![0.0, 3.0], vec![3.0, 0.0]]);
        let state = EmbeddingState { centers: array![[0.0, 0.0], [4.0, 0.0]], radii: vec![1.0, 1.0] };
        for alpha in [0.0, 0.5, 2.0] {
            let w = ObjectiveWeights::new(alpha, 1.0).unwrap();
            assert!((objective(&state, &target, &w) - (1.0 + alpha)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_weights_reduce_to_stress() {
        let target = stats(vec![1.0, 2.0, 3.0], vec![vec![0.0, 2.0, 3.0], vec![2.0, 0.0, 4.0], vec![3.0, 4.0, 0.0]]);
        let state = EmbeddingState {
            centers: array![[0.0, 0.0], [1.0, 1.0], [2.0, -1.0]],
            radii: vec![5.0, 0.1, 2.0],
        };
        let s = state.stats();
        let stress: f64 = target.pairs().iter().map(|&(i, j)| (s.distance(i, j) - target.distance(i, j)).powi(2)).sum();
        let w = ObjectiveWeights::new(0.0, 0.0).unwrap();
        assert!((objective(&state, &target, &w) - stress).abs() < 1e-12);
        // radius gradient vanishes with alpha = 0 and matched radii
        let matched = EmbeddingState { radii: target.radii().to_vec(), ..state };
        let g = gradient(&matched, &target, &ObjectiveWeights::new(0.0, 1.0).unwrap());
        assert!(g.radii.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = seed::rng(3);
        for case in 0..20 {
            let t = 5;
            let n = 2 + case % 2;
            let target = stats(
                (0..t).map(|_| rng.random_range(0.5..2.0)).collect(),
                {
                    let pts: Vec<Vec<f64>> = (0..t).map(|_| (0..6).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
                    pts.iter().map(|a| pts.iter().map(|b| crate::geometry::euclidean(a, b)).collect()).collect()
                },
            );
            let w = ObjectiveWeights::new(rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)).unwrap();
            let x: Vec<f64> = (0..t * n + t).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mut g = vec![0.0; x.len()];
            eval(&x, t, n, &target, &w, Some(&mut g));
            for k in 0..x.len() {
                let h = 1e-5;
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                let fd = (eval(&xp, t, n, &target, &w, None) - eval(&xm, t, n, &target, &w, None)) / (2.0 * h);
                assert!((fd - g[k]).abs() <= 1e-5 * g[k].abs().max(1.0), "case {case} k {k}: {fd} vs {}", g[k]);
            }
        }
    }

    #[test]
    fn coincident_centers_use_axis_direction() {
        let target = stats(vec![1.0, 1.0], vec![vec![0.0, 2.0], vec![2.0, 0.0]]);
        let state = EmbeddingState { centers: array![[1.0, 1.0], [1.0, 1.0]], radii: vec![1.0, 1.0] };
        let g = gradient(&state, &target, &ObjectiveWeights::default());
        // d~ = 0 < d^ = 2: pulling the pair apart lowers E
        assert!(g.centers[[0, 0]] < 0.0 && g.centers[[1, 0]] > 0.0);
        assert_eq!(g.centers[[0, 1]], 0.0);
        assert_eq!(g.centers[[0, 0]], -g.centers[[1, 0]]);
    }

    #[test]
    fn rigid_motion_invariance() {
        let target = stats(vec![1.0, 0.5, 2.0], vec![vec![0.0, 2.0, 3.0], vec![2.0, 0.0, 2.5], vec![3.0, 2.5, 0.0]]);
        let state = EmbeddingState { centers: array![[0.0, 0.0], [1.5, 0.3], [0.2, 2.0]], radii: vec![0.8, 0.7, 1.5] };
        let (s, c) = 1.1f64.sin_cos();
        let rot = |m: &Array2<f64>| {
            let mut out = m.clone();
            for mut r in out.outer_iter_mut() {
                let (x, y) = (r[0], r[1]);
                r[0] = c * x - s * y;
                r[1] = s * x + c * y;
            }
            out
        };
        let moved = EmbeddingState { centers: rot(&state.centers) + 5.0, radii: state.radii.clone() };
        let w = ObjectiveWeights::default();
        assert!((objective(&state, &target, &w) - objective(&moved, &target, &w)).abs() < 1e-12);
        let g0 = gradient(&state, &target, &w);
        let g1 = gradient(&moved, &target, &w);
        let g0r = rot(&g0.centers);
        assert!(g0r.iter().zip(g1.centers.iter()).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}
