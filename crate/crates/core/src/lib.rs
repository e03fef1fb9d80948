//! Hypersphere models of labeled high-dimensional distributions.
//!
//! Each labeled class is summarized by an enclosing hypersphere (center and
//! radius in the original space). The radii, pairwise center distances and
//! margins/overlaps of those hyperspheres are then reproduced as closely as
//! possible by circles (2D) or spheres (3D), tested for significance with
//! permutation and bootstrap resampling, and rendered to SVG.
//!
//! The crate is organized by pipeline stage:
//!
//! * [`geometry`]: datasets, hyperspheres and their summary statistics.
//! * [`estimators`]: center/radius estimators and calibration tables.
//! * [`embedding`]: low-dimensional sphere embedding (MDS start + descent).
//! * [`inference`]: first- and second-order significance tests with FDR.
//! * [`synthetic`]: ground-truth generators, benchmarks and calibration.
//! * [`render`]: SVG scenes and Hinton-style inference diagrams.

pub mod embedding;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod inference;
pub mod render;
pub mod seed;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};
pub use geometry::{
    d2c, summary_stats, DistanceDataset, Hypersphere, HypersphereEnsemble, LabeledClass,
    LabeledDataset, SummaryStats,
};

/// Version of this crate.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
