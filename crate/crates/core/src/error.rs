use thiserror::Error;

use crate::geometry::Hypersphere;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("class `{label}` has {found} points, at least {required} required")]
    ClassTooSmall {
        label: String,
        found: usize,
        required: usize,
    },

    #[error("estimator {0} needs point coordinates and cannot run on a distance matrix")]
    RequiresPoints(String),

    #[error("minimum enclosing ball did not converge within {iterations} iterations (best radius {})", best.radius)]
    MebNotConverged {
        iterations: usize,
        best: Hypersphere,
    },

    #[error("MCMC acceptance rate {rate:.4} is below 1% (proposal scale {proposal_scale:.3e}, {proposals} proposals)")]
    LowAcceptance {
        rate: f64,
        proposal_scale: f64,
        proposals: usize,
    },
}
