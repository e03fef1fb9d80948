//! Resampling significance tests on hypersphere statistics.
//!
//! First-order tests ask whether a pair of classes is separated (center
//! distance above 0, permutation test) or overlapping (overlap different
//! from 0, BCa bootstrap). Second-order tests compare radii within a pair
//! and separations or overlaps across pairs. Each family of tests is
//! corrected for multiple comparisons with Benjamini–Hochberg.

pub mod bootstrap;
pub mod fdr;
pub mod report;
pub(crate) mod resampling;
pub mod separation;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bootstrap::{bca_interval, percentile_interval};
pub use fdr::{bh_adjust, fdr_correct};
pub use report::{apply_fdr, full_inference, CellError, InferenceReport, Matrix};
pub use resampling::{overlap_diff_test, overlap_test, radius_diff_test, separation_diff_test};
pub use separation::{crossval_separation, separation_test};

/// Classes with more points than this trigger a warning in the overlap and
/// radius-difference tests.
pub const LARGE_CLASS_WARNING: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResamplingConfig {
    pub n_resamples: usize,
    pub alpha_level: f64,
    pub seed: u64,
}

impl Default for ResamplingConfig {
    fn default() -> Self {
        Self { n_resamples: 5000, alpha_level: 0.05, seed: 0 }
    }
}

impl ResamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_resamples < bootstrap::MIN_BOOTSTRAP {
            return Err(Error::InvalidArgument(format!(
                "n_resamples must be at least {}, got {}",
                bootstrap::MIN_BOOTSTRAP,
                self.n_resamples
            )));
        }
        if !(self.alpha_level > 0.0 && self.alpha_level < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha_level must lie in (0, 1), got {}",
                self.alpha_level
            )));
        }
        Ok(())
    }

    /// Same settings with the seed replaced by one derived from `path`.
    pub fn derived(&self, path: &[u64]) -> Self {
        Self { seed: crate::seed::derive(self.seed, path), ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TestKind {
    Separation,
    Overlap,
    RadiusDiff,
    SeparationDiff,
    OverlapDiff,
}

impl TestKind {
    pub const ALL: [TestKind; 5] = [
        TestKind::Separation,
        TestKind::Overlap,
        TestKind::RadiusDiff,
        TestKind::SeparationDiff,
        TestKind::OverlapDiff,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestKind::Separation => "SEPARATION",
            TestKind::Overlap => "OVERLAP",
            TestKind::RadiusDiff => "RADIUS_DIFF",
            TestKind::SeparationDiff => "SEPARATION_DIFF",
            TestKind::OverlapDiff => "OVERLAP_DIFF",
        }
    }

    pub(crate) fn id(self) -> u64 {
        self as u64 + 1
    }
}

impl std::fmt::Display for TestKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let u = s.trim().to_ascii_uppercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == u)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown test kind `{s}`")))
    }
}

/// Outcome of one significance test.
///
/// The separation test is a one-sided permutation test and fills
/// `p_value`. The other tests are two-sided bootstrap tests that decide by
/// whether the interval excludes 0; `implied_p` is the smallest level at
/// which it would, and is what the FDR correction uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub kind: TestKind,
    pub estimate: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub p_value: Option<f64>,
    pub implied_p: Option<f64>,
    /// Benjamini–Hochberg adjusted p-value within the test's family. Equal to
    /// the raw p-value until a correction is applied.
    pub p_adjusted: f64,
    /// Decision at `alpha_level` before multiple-comparison correction.
    pub significant_uncorrected: bool,
    /// Decision after correction (equal to the uncorrected one for a
    /// standalone test).
    pub significant: bool,
    pub n_resamples: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl TestResult {
    /// The p-value fed to the FDR correction.
    pub fn decision_p(&self) -> f64 {
        self.p_value.or(self.implied_p).unwrap_or(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(ResamplingConfig::default().validate().is_ok());
        assert_eq!(ResamplingConfig::default().n_resamples, 5000);
        assert!(ResamplingConfig { n_resamples: 99, ..Default::default() }.validate().is_err());
        assert!(ResamplingConfig { alpha_level: 1.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn kind_names() {
        for k in TestKind::ALL {
            assert_eq!(k.name().parse::<TestKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.name()));
        }
    }
}
