//! Synthetic data with known geometry: generators, the estimator benchmark,
//! null-simulation calibration of the tests, and re-derivation of the
//! calibration tables.

pub mod bench;
pub mod calibration;
pub mod derive;
pub mod sampling;
pub mod scenario;

pub use bench::{estimator_benchmark, rows_to_csv, BenchConfig, BenchEstimator, BenchRow};
pub use calibration::{calibration_fpr, FprResult, NullSpec};
pub use derive::{derive_xi, derive_zeta};
pub use sampling::{sample_ball, sample_cube, sample_gaussian, Distribution};
pub use scenario::{generate_scenario, Scenario, ScenarioKind, ScenarioSpec};
