//! JSON artifacts exchanged between stages.

use std::fs;
use std::path::{Path, PathBuf};

use h2s_core::embedding::Embedding;
use h2s_core::estimators::FittedModel;
use h2s_core::inference::InferenceReport;
use h2s_core::render::Scene;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{DataSource, RunConfig, Seeds};
use crate::error::{CliError, CliResult};

pub const MODEL: &str = "model.json";
pub const EMBEDDING: &str = "embedding.json";
pub const INFERENCE: &str = "inference.json";
pub const SCENE_JSON: &str = "scene.json";
pub const SCENE_SVG: &str = "scene.svg";
pub const MANIFEST: &str = "manifest.json";
pub const DIAGRAMS: &str = "diagrams";

/// A stage output stamped with the hash of the configuration behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub config_hash: String,
    pub stage: String,
    pub content: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub data: DataSource,
    pub tables: Option<PathBuf>,
    pub model: FittedModel,
    pub warnings: Vec<String>,
}

pub type ModelFile = Artifact<ModelArtifact>;
pub type EmbeddingFile = Artifact<Embedding>;
pub type InferenceFile = Artifact<InferenceReport>;
pub type SceneFile = Artifact<Scene>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub h2s_core: String,
    pub h2s_cli: String,
}

impl Versions {
    pub fn current() -> Self {
        Self { h2s_core: h2s_core::VERSION.into(), h2s_cli: env!("CARGO_PKG_VERSION").into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub config: RunConfig,
    pub seeds: Seeds,
    pub versions: Versions,
    pub artifacts: Vec<String>,
    /// False when the embedding hit its iteration cap.
    pub converged: bool,
    pub warnings: Vec<String>,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s
}

pub fn read<T: DeserializeOwned>(path: &Path, stage: &'static str) -> CliResult<T> {
    if !path.exists() {
        return Err(CliError::MissingArtifact { path: path.to_path_buf(), stage });
    }
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|source| CliError::Artifact { path: path.to_path_buf(), source })
}

/// Whether `path` holds an artifact stamped with `hash`.
pub fn is_current(path: &Path, hash: &str) -> bool {
    #[derive(Deserialize)]
    struct Stamp {
        config_hash: String,
    }
    fs::read_to_string(path)
        .ok()
        .and_then(|t| serde_json::from_str::<Stamp>(&t).ok())
        .is_some_and(|s| s.config_hash == hash)
}

/// Adds the config hash as a comment after the XML declaration.
pub fn stamp_svg(svg: &str, hash: &str) -> String {
    match svg.split_once('\n') {
        Some((decl, rest)) => format!("{decl}\n<!-- config-hash: {hash} -->\n{rest}"),
        None => svg.to_string(),
    }
}

/// Files written together: staged in a scratch directory under the output
/// directory and moved into place only once all of them are written.
#[derive(Debug, Default)]
pub struct ArtifactSet {
    files: Vec<(PathBuf, String)>,
}

impl ArtifactSet {
    pub fn add(&mut self, relative: impl Into<PathBuf>, body: String) {
        self.files.push((relative.into(), body));
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|(p, _)| p.to_string_lossy().replace('\\', "/")).collect()
    }

    pub fn commit(self, out: &Path) -> CliResult<Vec<PathBuf>> {
        fs::create_dir_all(out).map_err(CliError::io(out))?;
        let staging = out.join(".h2s-staging");
        let result = self.stage_and_move(out, &staging);
        let _ = fs::remove_dir_all(&staging);
        result
    }

    fn stage_and_move(self, out: &Path, staging: &Path) -> CliResult<Vec<PathBuf>> {
        if staging.exists() {
            fs::remove_dir_all(staging).map_err(CliError::io(staging))?;
        }
        for (rel, body) in &self.files {
            let p = staging.join(rel);
            if let Some(parent) = p.parent() {
                fs::create_dir_all(parent).map_err(CliError::io(parent))?;
            }
            fs::write(&p, body).map_err(CliError::io(&p))?;
        }
        let mut written = Vec::new();
        for (rel, _) in &self.files {
            let dest = out.join(rel);
            if let Some(parent) = dest.parent() {
                fs::create_dir_all(parent).map_err(CliError::io(parent))?;
            }
            fs::rename(staging.join(rel), &dest).map_err(CliError::io(&dest))?;
            written.push(dest);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stamping() {
        let s = stamp_svg("<?xml version=\"1.0\"?>\n<svg/>\n", "abc");
        assert_eq!(s, "<?xml version=\"1.0\"?>\n<!-- config-hash: abc -->\n<svg/>\n");
    }

    #[test]
    fn commit_writes_nested_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut set = ArtifactSet::default();
        set.add("a.json", "{\"config_hash\": \"h\"}".into());
        set.add("diagrams/b.svg", "<svg/>".into());
        assert_eq!(set.names(), vec!["a.json", "diagrams/b.svg"]);
        let written = set.commit(dir.path()).unwrap();
        assert_eq!(written.len(), 2);
        assert!(dir.path().join("diagrams/b.svg").exists());
        assert!(!dir.path().join(".h2s-staging").exists());
        assert!(is_current(&dir.path().join("a.json"), "h"));
        assert!(!is_current(&dir.path().join("a.json"), "g"));
    }

    #[test]
    fn missing_artifact_names_stage() {
        let err = read::<ModelFile>(Path::new("/nonexistent/model.json"), "fit").unwrap_err();
        assert!(err.to_string().contains("h2s fit"));
        assert_eq!(err.exit_code(), 2);
    }
}
