//! Run configuration.

use std::fs;
use std::path::{Path, PathBuf};

use h2s_core::embedding::ObjectiveWeights;
use h2s_core::estimators::{CalibrationTables, EstimatorChoice, EstimatorKind};
use h2s_core::inference::ResamplingConfig;
use h2s_core::render::RenderOptions;
use h2s_core::seed;
use h2s_core::synthetic::ScenarioSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::ingest::FileSource;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    File(FileSource),
    Scenario(ScenarioSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedConfig {
    pub dim: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Skip descent and keep the MDS centers with target radii.
    pub mds_only: bool,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self { dim: 2, alpha: 1.0, beta: 1.0, mds_only: false }
    }
}

impl EmbedConfig {
    pub fn weights(&self) -> CliResult<ObjectiveWeights> {
        ObjectiveWeights::new(self.alpha, self.beta).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(CliError::Config(format!("embedding dimension must be 2 or 3, got {}", self.dim)));
        }
        self.weights().map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferenceConfig {
    pub resamples: usize,
    /// Significance level of the tests and of the FDR correction.
    pub alpha_level: f64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        let d = ResamplingConfig::default();
        Self { resamples: d.n_resamples, alpha_level: d.alpha_level }
    }
}

impl InferenceConfig {
    pub fn resampling(&self, seed: u64) -> CliResult<ResamplingConfig> {
        let c = ResamplingConfig { n_resamples: self.resamples, alpha_level: self.alpha_level, seed };
        c.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(c)
    }
}

/// Stage seeds derived from the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub fit: u64,
    pub embed: u64,
    pub infer: u64,
}

impl Seeds {
    pub fn from_master(master: u64) -> Self {
        Self { fit: seed::derive(master, &[0]), embed: seed::derive(master, &[1]), infer: seed::derive(master, &[2]) }
    }
}

/// Everything a pipeline run depends on. A missing `embedding`,
/// `inference` or `render` section takes its defaults; setting it to
/// `null` skips that stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub data: Option<DataSource>,
    pub seed: u64,
    pub estimator: EstimatorKind,
    pub mcmc_samples: usize,
    /// Calibration tables replacing the built-in ones.
    pub tables: Option<PathBuf>,
    pub embedding: Option<EmbedConfig>,
    pub inference: Option<InferenceConfig>,
    pub render: Option<RenderOptions>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            seed: 0,
            estimator: EstimatorKind::default(),
            mcmc_samples: EstimatorChoice::default().mcmc_samples,
            tables: None,
            embedding: Some(EmbedConfig::default()),
            inference: Some(InferenceConfig::default()),
            render: Some(RenderOptions::default()),
            out: PathBuf::from("h2s-out"),
        }
    }
}

impl RunConfig {
    /// Reads a JSON config; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let join = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        if let Some(DataSource::File(f)) = &cfg.data {
            cfg.data = Some(DataSource::File(crate::ingest::resolve(f, base)));
        }
        cfg.tables = cfg.tables.as_deref().map(join);
        cfg.out = join(&cfg.out);
        Ok(cfg)
    }

    pub fn seeds(&self) -> Seeds {
        Seeds::from_master(self.seed)
    }

    pub fn estimator_choice(&self) -> EstimatorChoice {
        EstimatorChoice { kind: self.estimator, mcmc_samples: self.mcmc_samples, seed: self.seeds().fit }
    }

    pub fn validate(&self) -> CliResult<()> {
        let data = self.data.as_ref().ok_or_else(|| CliError::Config("no data source".into()))?;
        if let DataSource::Scenario(s) = data {
            s.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        self.estimator_choice().validate().map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(e) = &self.embedding {
            e.validate()?;
        }
        if let Some(i) = &self.inference {
            i.resampling(0)?;
            if let DataSource::File(f) = data {
                let distances = f.labels.is_some() || f.format == Some(crate::ingest::Format::Distances);
                if distances {
                    return Err(CliError::Config("inference needs point data; set `inference` to null".into()));
                }
            }
        }
        if let Some(r) = &self.render {
            r.validate().map_err(|e| CliError::Config(e.to_string()))?;
            if self.embedding.is_none() {
                return Err(CliError::Config("rendering needs the embedding stage".into()));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        content_hash(&c)
    }
}

pub fn content_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config serializes");
    hex::encode(Sha256::digest(&json))
}

pub fn load_tables(path: Option<&Path>) -> CliResult<CalibrationTables> {
    match path {
        None => Ok(CalibrationTables::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(CliError::io(p))?;
            CalibrationTables::from_json(&text).map_err(|e| CliError::Input { path: p.to_path_buf(), message: e.to_string() })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use h2s_core::synthetic::ScenarioKind;

    fn scenario_config() -> RunConfig {
        RunConfig {
            data: Some(DataSource::Scenario(ScenarioSpec::named(ScenarioKind::Touching, 10, 50, 1.0, 3).unwrap())),
            ..Default::default()
        }
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let c = scenario_config();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), c);
        let minimal: RunConfig = serde_json::from_str(r#"{"data": {"source": "file", "path": "x.csv"}}"#).unwrap();
        assert!(minimal.inference.is_some());
        assert_eq!(minimal.inference.unwrap().resamples, 5000);
        let fit_only: RunConfig =
            serde_json::from_str(r#"{"data": {"source": "file", "path": "x.csv"}, "inference": null}"#).unwrap();
        assert!(fit_only.inference.is_none());
    }

    #[test]
    fn hash_ignores_output_directory() {
        let a = scenario_config();
        let mut b = a.clone();
        b.out = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn validation() {
        assert!(scenario_config().validate().is_ok());
        let mut c = scenario_config();
        c.embedding = Some(EmbedConfig { dim: 4, ..Default::default() });
        assert!(c.validate().is_err());
        let mut c = scenario_config();
        c.inference = Some(InferenceConfig { resamples: 10, alpha_level: 0.05 });
        assert!(c.validate().is_err());
        assert!(RunConfig::default().validate().is_err());
        let mut c = scenario_config();
        c.embedding = None;
        assert!(c.validate().is_err());
    }

    #[test]
    fn stage_seeds_differ() {
        let s = Seeds::from_master(7);
        assert_ne!(s.fit, s.embed);
        assert_ne!(s.embed, s.infer);
    }
}
