//! Two-class geometric scenarios with exact ground truth.

use serde::{Deserialize, Serialize};

use super::sampling::Distribution;
use crate::error::{Error, Result};
use crate::geometry::{euclidean, Hypersphere, HypersphereEnsemble, LabeledClass, LabeledDataset};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ScenarioKind {
    /// Equal radii, centers `r1 + r2` apart.
    Touching,
    /// Shared center, inner radius half the outer one.
    Concentric,
    /// Inner ball of half the radius touching the outer one from inside.
    EnclosedTouching,
    /// Equal radii, centers one radius apart.
    Intersecting,
    /// As `Intersecting`, with 100 and 20 points.
    Imbalanced,
    /// Caller-supplied geometry.
    Custom,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::Touching,
        ScenarioKind::Concentric,
        ScenarioKind::EnclosedTouching,
        ScenarioKind::Intersecting,
        ScenarioKind::Imbalanced,
        ScenarioKind::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Touching => "TOUCHING",
            ScenarioKind::Concentric => "CONCENTRIC",
            ScenarioKind::EnclosedTouching => "ENCLOSED_TOUCHING",
            ScenarioKind::Intersecting => "INTERSECTING",
            ScenarioKind::Imbalanced => "IMBALANCED",
            ScenarioKind::Custom => "CUSTOM",
        }
    }
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let u = s.trim().to_ascii_uppercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == u)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scenario `{s}`")))
    }
}

/// Geometry and sampling settings of a synthetic dataset.
///
/// `centers` may list only leading coordinates; they are padded with zeros
/// to `dim`. For Gaussian and cube data, `radii` are the scoring radii and
/// the sampling scale is derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub dim: usize,
    pub samples: Vec<usize>,
    pub radii: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    pub distribution: Distribution,
    pub seed: u64,
}

/// Relative tolerance on the defining equation of a named scenario.
const GEOMETRY_TOL: f64 = 1e-12;

impl ScenarioSpec {
    /// Standard geometry for a named kind with outer radius `radius`.
    /// `samples` is per class, except for `Imbalanced` which always uses 100
    /// and 20 points.
    pub fn named(kind: ScenarioKind, dim: usize, samples: usize, radius: f64, seed: u64) -> Result<Self> {
        let r = radius;
        let (radii, offset, samples) = match kind {
            ScenarioKind::Touching => (vec![r, r], 2.0 * r, vec![samples; 2]),
            ScenarioKind::Concentric => (vec![r, 0.5 * r], 0.0, vec![samples; 2]),
            ScenarioKind::EnclosedTouching => (vec![r, 0.5 * r], 0.5 * r, vec![samples; 2]),
            ScenarioKind::Intersecting => (vec![r, r], r, vec![samples; 2]),
            ScenarioKind::Imbalanced => (vec![r, r], r, vec![100, 20]),
            ScenarioKind::Custom => {
                return Err(Error::InvalidArgument("custom scenarios need explicit geometry".into()))
            }
        };
        let spec = Self {
            kind,
            dim,
            samples,
            radii,
            centers: vec![vec![0.0], vec![offset]],
            distribution: Distribution::Ball,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_distribution(mut self, distribution: Distribution) -> Self {
        self.distribution = distribution;
        self
    }

    fn full_centers(&self) -> Vec<Vec<f64>> {
        self.centers
            .iter()
            .map(|c| {
                let mut v = c.clone();
                v.resize(self.dim, 0.0);
                v
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.radii.len();
        if self.dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if t == 0 || self.samples.len() != t || self.centers.len() != t {
            return Err(Error::InvalidArgument(
                "samples, radii and centers must have one entry per class".into(),
            ));
        }
        if self.samples.iter().any(|&p| p < 2) {
            return Err(Error::InvalidArgument("each class needs at least 2 samples".into()));
        }
        if self.radii.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
            return Err(Error::InvalidArgument("radii must be finite and nonnegative".into()));
        }
        if self.centers.iter().any(|c| c.len() > self.dim || c.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidArgument("centers must be finite with at most `dim` coordinates".into()));
        }
        if self.kind == ScenarioKind::Custom {
            return Ok(());
        }
        if t != 2 {
            return Err(Error::InvalidArgument(format!("{} scenarios have two classes", self.kind)));
        }
        let c = self.full_centers();
        let d = euclidean(&c[0], &c[1]);
        let (r0, r1) = (self.radii[0], self.radii[1]);
        let close = |a: f64, b: f64| (a - b).abs() <= GEOMETRY_TOL * (r0 + r1).max(1.0);
        let ok = match self.kind {
            ScenarioKind::Touching => close(d, r0 + r1),
            ScenarioKind::Concentric => d == 0.0 && r0 != r1,
            ScenarioKind::EnclosedTouching => r1 < r0 && close(d, r0 - r1),
            ScenarioKind::Intersecting => (r0 - r1).abs() < d && d < r0 + r1,
            ScenarioKind::Imbalanced => {
                (r0 - r1).abs() < d && d < r0 + r1 && self.samples[0] != self.samples[1]
            }
            ScenarioKind::Custom => true,
        };
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "geometry (d = {d}, radii {r0}, {r1}) does not realize {}",
                self.kind
            )));
        }
        Ok(())
    }
}

/// A generated dataset and the spheres it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub dataset: LabeledDataset,
    pub truth: HypersphereEnsemble,
}

pub fn class_label(k: usize) -> String {
    if k < 26 {
        char::from(b'A' + k as u8).to_string()
    } else {
        format!("C{k}")
    }
}

pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let centers = spec.full_centers();
    let labels: Vec<String> = (0..spec.radii.len()).map(class_label).collect();
    let unit = spec.distribution.true_radius(spec.dim, 1.0);
    let classes = centers
        .iter()
        .zip(&spec.radii)
        .zip(&spec.samples)
        .enumerate()
        .map(|(k, ((c, &r), &p))| LabeledClass {
            label: labels[k].clone(),
            points: spec.distribution.sample(spec.dim, p, c, r / unit, seed::derive(spec.seed, &[k as u64])),
        })
        .collect();
    let spheres = centers
        .into_iter()
        .zip(&spec.radii)
        .map(|(c, &r)| Hypersphere::new(c, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(Scenario { dataset: LabeledDataset::new(classes)?, truth: HypersphereEnsemble::new(labels, spheres)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::summary_stats;

    #[test]
    fn named_geometries_hold_exactly() {
        let s = generate_scenario(&ScenarioSpec::named(ScenarioKind::Touching, 200, 100, 1.0, 1).unwrap()).unwrap();
        assert_eq!(summary_stats(&s.truth).margin(0, 1), 0.0);
        assert_eq!(s.dataset.class(0).points.dim(), (100, 200));

        let s = generate_scenario(&ScenarioSpec::named(ScenarioKind::Concentric, 10, 50, 2.0, 1).unwrap()).unwrap();
        let st = summary_stats(&s.truth);
        assert_eq!(st.distance(0, 1), 0.0);
        assert_eq!(st.radius(1) / st.radius(0), 0.5);

        let s = generate_scenario(&ScenarioSpec::named(ScenarioKind::EnclosedTouching, 10, 50, 2.0, 1).unwrap()).unwrap();
        let st = summary_stats(&s.truth);
        assert_eq!(st.distance(0, 1), st.radius(0) - st.radius(1));

        let s = generate_scenario(&ScenarioSpec::named(ScenarioKind::Imbalanced, 10, 50, 1.0, 1).unwrap()).unwrap();
        assert_eq!(s.dataset.class(0).points.nrows(), 100);
        assert_eq!(s.dataset.class(1).points.nrows(), 20);
    }

    #[test]
    fn invalid_geometry_is_rejected() {
        let mut spec = ScenarioSpec::named(ScenarioKind::Touching, 3, 10, 1.0, 1).unwrap();
        spec.centers[1] = vec![1.5];
        assert!(generate_scenario(&spec).is_err());
        spec.kind = ScenarioKind::Custom;
        assert!(generate_scenario(&spec).is_ok());
    }

    #[test]
    fn deterministic() {
        let spec = ScenarioSpec::named(ScenarioKind::Intersecting, 5, 20, 1.0, 7)
            .unwrap()
            .with_distribution(Distribution::Gaussian);
        assert_eq!(generate_scenario(&spec).unwrap(), generate_scenario(&spec).unwrap());
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<ScenarioSpec>(&json).unwrap(), spec);
    }
}
