//! Posterior sampling of the uniform-ball model with flat priors on the
//! center and radius.
//!
//! Random-walk Metropolis over `(c, r)` with an isotropic Gaussian proposal.
//! The chain starts at the minimum enclosing ball inflated by 10%; during a
//! burn-in of 20% of the requested samples the log proposal scale is nudged
//! every 50 steps toward a 23% acceptance rate, then held fixed.

use ndarray::ArrayView2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::meb::fit_ml_ball;
use crate::error::{Error, Result};
use crate::geometry::Hypersphere;
use crate::seed;
use crate::stats;

pub const DEFAULT_SAMPLES: usize = 10_000;
const TARGET_ACCEPTANCE: f64 = 0.23;
const ADAPT_EVERY: usize = 50;
const MIN_ACCEPTANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSample {
    pub center: Vec<f64>,
    pub radius: f64,
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSamples {
    pub samples: Vec<PosteriorSample>,
    /// Fraction of accepted proposals after burn-in.
    pub acceptance_rate: f64,
    pub proposal_scale: f64,
}

/// Log volume of the unit `n`-ball.
pub fn ln_unit_ball_volume(n: usize) -> f64 {
    let n = n as f64;
    0.5 * n * std::f64::consts::PI.ln() - ln_gamma(0.5 * n + 1.0)
}

/// `-P log(r^N V_1(N))` when every point lies within `r` of `center`,
/// otherwise negative infinity.
pub fn log_likelihood(points: ArrayView2<'_, f64>, center: &[f64], radius: f64) -> f64 {
    if radius <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let r2 = radius * radius;
    let inside = points
        .outer_iter()
        .all(|row| row.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum::<f64>() <= r2);
    if !inside {
        return f64::NEG_INFINITY;
    }
    let (p, n) = points.dim();
    -(p as f64) * (n as f64 * radius.ln() + ln_unit_ball_volume(n))
}

/// Samples the posterior and returns it with the median point estimate
/// (median radius, coordinate-wise median center).
pub fn mcmc_fit(
    points: ArrayView2<'_, f64>,
    mcmc_samples: usize,
    seed: u64,
) -> Result<(PosteriorSamples, Hypersphere)> {
    let (p, n) = points.dim();
    if p < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 points, got {p}")));
    }
    if mcmc_samples == 0 {
        return Err(Error::InvalidArgument("mcmc_samples must be positive".into()));
    }
    let ml = match fit_ml_ball(points) {
        Ok(b) => b,
        Err(Error::MebNotConverged { best, .. }) => best,
        Err(e) => return Err(e),
    };
    if ml.radius == 0.0 {
        let empty = PosteriorSamples { samples: Vec::new(), acceptance_rate: 1.0, proposal_scale: 0.0 };
        return Ok((empty, ml));
    }

    let mut rng = seed::rng(seed);
    let mut center = ml.center.clone();
    let mut radius = 1.1 * ml.radius;
    let mut ll = log_likelihood(points, &center, radius);
    let mut log_scale = (0.05 * ml.radius / ((n + 1) as f64).sqrt()).ln();

    let burn_in = mcmc_samples / 5;
    let mut batch_accepted = 0usize;
    let mut accepted = 0usize;
    let mut samples = Vec::with_capacity(mcmc_samples);
    let mut proposal = vec![0.0; n];

    for step in 0..burn_in + mcmc_samples {
        let scale = log_scale.exp();
        for (q, c) in proposal.iter_mut().zip(&center) {
            *q = c + scale * rng.sample::<f64, _>(StandardNormal);
        }
        let r_new = radius + scale * rng.sample::<f64, _>(StandardNormal);
        let ll_new = log_likelihood(points, &proposal, r_new);
        let accept = ll_new.is_finite() && {
            let u: f64 = rng.random();
            u.ln() < ll_new - ll
        };
        if accept {
            center.copy_from_slice(&proposal);
            radius = r_new;
            ll = ll_new;
        }
        if step < burn_in {
            batch_accepted += usize::from(accept);
            if (step + 1) % ADAPT_EVERY == 0 {
                let rate = batch_accepted as f64 / ADAPT_EVERY as f64;
                log_scale += 2.0 * (rate - TARGET_ACCEPTANCE);
                batch_accepted = 0;
            }
        } else {
            accepted += usize::from(accept);
            samples.push(PosteriorSample { center: center.clone(), radius, log_likelihood: ll });
        }
    }

    let rate = accepted as f64 / mcmc_samples as f64;
    if rate < MIN_ACCEPTANCE {
        return Err(Error::LowAcceptance {
            rate,
            proposal_scale: log_scale.exp(),
            proposals: mcmc_samples,
        });
    }

    let radii: Vec<f64> = samples.iter().map(|s| s.radius).collect();
    let mut coord = vec![0.0; samples.len()];
    let med_center: Vec<f64> = (0..n)
        .map(|j| {
            for (slot, s) in coord.iter_mut().zip(&samples) {
                *slot = s.center[j];
            }
            stats::median_in_place(&mut coord)
        })
        .collect();
    let estimate = Hypersphere { center: med_center, radius: stats::median(&radii) };
    Ok((
        PosteriorSamples { samples, acceptance_rate: rate, proposal_scale: log_scale.exp() },
        estimate,
    ))
}
