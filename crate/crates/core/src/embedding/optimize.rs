//! Projected L-BFGS descent on the embedding objective, with multi-starts.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{eval, mds_init, Embedding, EmbeddingMethod, EmbeddingState, ObjectiveWeights};
use crate::geometry::SummaryStats;
use crate::seed;

pub const MULTI_STARTS: usize = 8;
pub const MAX_ITERATIONS: usize = 10_000;
const MEMORY: usize = 10;
const GRADIENT_TOL: f64 = 1e-8;
const EXACT_TOL: f64 = 1e-12;
const JITTER: f64 = 0.05;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
const STALL_ITERATIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The starting point already matched the targets.
    Exact,
    /// Projected gradient norm fell below tolerance.
    GradientTolerance,
    /// No further decrease was achievable.
    Stalled,
    /// Hit the iteration cap.
    IterationCap,
}

impl Termination {
    pub fn is_converged(self) -> bool {
        self != Termination::IterationCap
    }
}

/// Outcome of one descent run.
#[derive(Debug, Clone)]
pub struct Descent {
    pub state: EmbeddingState,
    pub objective: f64,
    /// Objective after every accepted step, starting with the initial value.
    pub trace: Vec<f64>,
    pub termination: Termination,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Zeroes gradient components of radii pinned at the lower bound.
fn project_gradient(x: &[f64], g: &[f64], radius_start: usize) -> Vec<f64> {
    g.iter()
        .enumerate()
        .map(|(k, &gk)| if k >= radius_start && x[k] <= 0.0 && gk > 0.0 { 0.0 } else { gk })
        .collect()
}

fn two_loop(pg: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = pg.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Projected L-BFGS from `init` with Armijo backtracking. Radii are clipped
/// at zero after every trial step and the objective never increases.
pub fn descend(
    target: &SummaryStats,
    weights: &ObjectiveWeights,
    init: EmbeddingState,
    scale: f64,
) -> Descent {
    let (t, n) = (init.len(), init.dim());
    let rs = t * n;
    let mut x = init.to_params();
    for v in &mut x[rs..] {
        *v = v.max(0.0);
    }
    let f_eval = |x: &[f64], g: &mut [f64]| eval(x, t, n, target, weights, Some(g));
    let mut g = vec![0.0; x.len()];
    let mut f = f_eval(&x, &mut g);
    let mut trace = vec![f];
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut stall = 0;
    let mut termination = Termination::IterationCap;
    let mut iterations = 0;
    let mut g_new = vec![0.0; x.len()];

    while iterations < MAX_ITERATIONS {
        let pg = project_gradient(&x, &g, rs);
        if norm(&pg) < GRADIENT_TOL * scale || f == 0.0 {
            termination = Termination::GradientTolerance;
            break;
        }
        iterations += 1;
        let mut dir = two_loop(&pg, &memory);
        for k in rs..x.len() {
            if pg[k] == 0.0 && x[k] <= 0.0 {
                dir[k] = dir[k].max(0.0);
            }
        }
        if dot(&dir, &pg) >= 0.0 {
            memory.clear();
            dir = pg.iter().map(|v| -v).collect();
        }
        let mut step = if memory.is_empty() { (scale / norm(&dir)).min(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = x
                .iter()
                .zip(&dir)
                .enumerate()
                .map(|(k, (xi, di))| {
                    let v = xi + step * di;
                    if k >= rs { v.max(0.0) } else { v }
                })
                .collect();
            let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let f_trial = f_eval(&trial, &mut g_new);
            if f_trial <= f + ARMIJO * dot(&g, &s).min(0.0) && f_trial <= f {
                accepted = Some((trial, s, f_trial));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, s, f_trial)) = accepted else {
            if memory.is_empty() {
                termination = Termination::Stalled;
                break;
            }
            memory.clear();
            continue;
        };
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if memory.len() == MEMORY {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        stall = if f - f_trial <= 1e-15 * f { stall + 1 } else { 0 };
        x = trial;
        f = f_trial;
        std::mem::swap(&mut g, &mut g_new);
        trace.push(f);
        if stall >= STALL_ITERATIONS {
            termination = Termination::Stalled;
            break;
        }
    }
    Descent { state: EmbeddingState::from_params(&x, t, n), objective: f, trace, termination, iterations }
}

fn initial_state(target: &SummaryStats, n: usize) -> EmbeddingState {
    EmbeddingState { centers: mds_init(target, n), radii: target.radii().to_vec() }
}

/// Fits an `n`-dimensional embedding (`n` = 2 or 3) to `target`.
///
/// Radii start at the targets and centers at the MDS solution. If there are
/// at most `n + 1` classes and that start is already exact it is returned
/// directly; otherwise [`MULTI_STARTS`] descents run from the MDS start and
/// from seeded jittered copies of it, and the lowest objective wins (ties go
/// to the earliest start).
pub fn optimize(target: &SummaryStats, n: usize, weights: &ObjectiveWeights, seed: u64) -> Embedding {
    let t = target.len();
    let scale = target.length_scale();
    let init = initial_state(target, n);
    let e0 = super::objective(&init, target, weights);
    if t <= n + 1 && e0 <= EXACT_TOL * scale * scale {
        return Embedding::assemble(init, target, *weights, EmbeddingMethod::Optimized, Termination::Exact, 0);
    }
    let sigma = JITTER * scale;
    let runs: Vec<Descent> = (0..MULTI_STARTS)
        .into_par_iter()
        .map(|k| {
            let mut start = init.clone();
            if k > 0 {
                let mut rng = seed::derived_rng(seed, &[k as u64]);
                start.centers.mapv_inplace(|v| v + sigma * rng.sample::<f64, _>(StandardNormal));
            }
            descend(target, weights, start, scale)
        })
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.objective < a.objective { b } else { a })
        .expect("at least one start");
    Embedding::assemble(
        best.state,
        target,
        *weights,
        EmbeddingMethod::Optimized,
        best.termination,
        best.iterations,
    )
}

/// MDS centers with radii copied from the targets, without descent.
pub fn mds_only_embedding(target: &SummaryStats, n: usize) -> Embedding {
    Embedding::assemble(
        initial_state(target, n),
        target,
        ObjectiveWeights::default(),
        EmbeddingMethod::MdsOnly,
        Termination::Exact,
        0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::objective;
    use rand::Rng;

    fn random_target(t: usize, seed: u64) -> SummaryStats {
        let mut rng = seed::rng(seed);
        let pts: Vec<Vec<f64>> = (0..t).map(|_| (0..8).map(|_| rng.random_range(-4.0..4.0)).collect()).collect();
        let d = pts.iter().map(|a| pts.iter().map(|b| crate::geometry::euclidean(a, b)).collect()).collect();
        SummaryStats::from_parts((0..t).map(|_| rng.random_range(0.5..3.0)).collect(), d).unwrap()
    }

    #[test]
    fn perfect_for_small_ensembles() {
        for s in 0..20 {
            for (t, n) in [(2, 2), (3, 2), (4, 3), (1, 2)] {
                let e = optimize(&random_target(t, s), n, &ObjectiveWeights::default(), s);
                assert!(e.errors.max_relative_error <= 1e-6, "t {t} n {n}: {}", e.errors.max_relative_error);
                assert_eq!(e.termination, Termination::Exact);
            }
        }
    }

    #[test]
    fn descent_is_monotone() {
        let target = random_target(6, 4);
        let init = initial_state(&target, 2);
        let d = descend(&target, &ObjectiveWeights::new(2.0, 0.5).unwrap(), init, target.length_scale());
        assert!(d.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(d.termination.is_converged());
    }

    #[test]
    fn optimize_improves_on_mds_only() {
        let target = random_target(6, 7);
        let w = ObjectiveWeights::default();
        let opt = optimize(&target, 2, &w, 1);
        let mds = mds_only_embedding(&target, 2);
        assert!(opt.objective <= mds.objective);
        assert!(mds.errors.radii.iter().all(|r| r.error == 0.0));
        assert!(opt.radii.iter().all(|&r| r >= 0.0));
    }

    #[test]
    fn reproducible() {
        let target = random_target(7, 9);
        let w = ObjectiveWeights::default();
        assert_eq!(optimize(&target, 3, &w, 5), optimize(&target, 3, &w, 5));
    }

    #[test]
    fn large_beta_pins_radii() {
        let target = random_target(6, 11);
        let w = ObjectiveWeights::new(1.0, 1e8).unwrap();
        let opt = optimize(&target, 2, &w, 2);
        for (a, b) in opt.radii.iter().zip(target.radii()) {
            assert!((a - b).abs() <= 1e-3 * b);
        }
        let mds = mds_only_embedding(&target, 2);
        let stress = |e: &Embedding| super::super::mds::stress(&e.state().centers, target.distances());
        let scale2 = target.length_scale().powi(2);
        assert!((stress(&opt) - stress(&mds)).abs() <= 1e-3 * scale2.max(stress(&mds)));
        let _ = objective(&opt.state(), &target, &w);
    }
}
