//! Center and radius estimators for a single class, and ensemble fitting.

pub mod fit;
pub mod mcmc;
pub mod meb;
pub mod radius;
pub mod tables;

pub use fit::{fit_class, fit_ensemble, fit_rows, DatasetRef, EstimatorChoice, EstimatorKind, FittedModel};
pub use mcmc::{mcmc_fit, PosteriorSample, PosteriorSamples};
pub use meb::fit_ml_ball;
pub use radius::{
    center_mean, gamma_fn, r_adapt, r_dcb1, r_dcb2, r_dcc, r_dcg, r_dist, r_dist_points, r_mean_d2c,
};
pub use tables::CalibrationTables;
