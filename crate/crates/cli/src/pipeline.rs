//! The fit, embed, infer and render stages and the end-to-end run.

use std::path::{Path, PathBuf};

use h2s_core::embedding::{mds_only_embedding, optimize, Embedding};
use h2s_core::estimators::{fit_ensemble, CalibrationTables, DatasetRef, EstimatorChoice};
use h2s_core::inference::{full_inference, InferenceReport, Matrix, ResamplingConfig};
use h2s_core::render::{render_scene, render_significance_diagram, render_values_diagram, DiagramKind, RenderOptions};
use h2s_core::synthetic::generate_scenario;

use crate::artifact::{self, Artifact, ArtifactSet, Manifest, ModelArtifact, Versions};
use crate::config::{load_tables, DataSource, EmbedConfig, RunConfig};
use crate::error::{CliError, CliResult};
use crate::ingest::{ingest, Input};

/// Loads the data of a source, generating it for synthetic scenarios.
pub fn load_data(source: &DataSource) -> CliResult<(Input, Vec<String>)> {
    match source {
        DataSource::File(f) => {
            let ing = ingest(f)?;
            Ok((ing.input, ing.warnings))
        }
        DataSource::Scenario(spec) => {
            let s = generate_scenario(spec).map_err(CliError::stage("simulate"))?;
            Ok((Input::Points(s.dataset), vec![]))
        }
    }
}

pub fn fit_stage(input: &Input, choice: &EstimatorChoice, tables: &CalibrationTables) -> CliResult<h2s_core::estimators::FittedModel> {
    let data = match input {
        Input::Points(d) => DatasetRef::Points(d),
        Input::Distances(d) => DatasetRef::Distances(d),
    };
    fit_ensemble(data, choice, tables).map_err(CliError::stage("fit"))
}

pub fn embed_stage(model: &h2s_core::estimators::FittedModel, cfg: &EmbedConfig, seed: u64) -> CliResult<Embedding> {
    cfg.validate()?;
    let e = if cfg.mds_only {
        mds_only_embedding(&model.stats, cfg.dim)
    } else {
        optimize(&model.stats, cfg.dim, &cfg.weights()?, seed)
    };
    e.with_labels(model.labels.clone()).map_err(CliError::stage("embed"))
}

pub fn infer_stage(
    input: &Input,
    choice: &EstimatorChoice,
    tables: &CalibrationTables,
    config: &ResamplingConfig,
) -> CliResult<InferenceReport> {
    match input {
        Input::Points(d) => full_inference(d, choice, tables, config).map_err(CliError::stage("infer")),
        Input::Distances(_) => Err(CliError::Config("inference needs point data".into())),
    }
}

/// Scene SVG and JSON plus the diagrams, keyed by relative path.
pub fn render_stage(
    embedding: &Embedding,
    report: Option<&InferenceReport>,
    options: &RenderOptions,
    hash: &str,
) -> CliResult<Vec<(PathBuf, String)>> {
    let stage = CliError::stage("render");
    let scene = render_scene(embedding, report, options).map_err(stage)?;
    let diagram = |k: DiagramKind| Path::new(artifact::DIAGRAMS).join(format!("{}.svg", k.name()));
    let mut files = vec![
        (PathBuf::from(artifact::SCENE_SVG), artifact::stamp_svg(&scene.svg, hash)),
        (
            PathBuf::from(artifact::SCENE_JSON),
            artifact::to_json(&Artifact { config_hash: hash.to_string(), stage: "render".into(), content: scene.scene }),
        ),
    ];
    let values = render_values_diagram(&embedding.target, &embedding.achieved, &embedding.labels, options)
        .map_err(CliError::stage("render"))?;
    files.push((diagram(DiagramKind::Values), artifact::stamp_svg(&values, hash)));
    if let Some(r) = report {
        for (kind, m) in [(DiagramKind::Significance, Matrix::FirstOrder), (DiagramKind::Pairwise, Matrix::SecondOrder)] {
            let svg = render_significance_diagram(r, m, options).map_err(CliError::stage("render"))?;
            files.push((diagram(kind), artifact::stamp_svg(&svg, hash)));
        }
    }
    Ok(files)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// True when the output directory already matched the configuration.
    pub skipped: bool,
    pub converged: bool,
    pub artifacts: Vec<PathBuf>,
}

/// Runs every configured stage and writes the artifacts and manifest to
/// `config.out`. Nothing is written unless every stage succeeds. An output
/// directory whose manifest carries the same config hash is left alone
/// unless `force` is set.
pub fn run_pipeline(config: &RunConfig, force: bool) -> CliResult<RunOutcome> {
    config.validate()?;
    let hash = config.hash();
    let out = &config.out;
    let manifest_path = out.join(artifact::MANIFEST);
    if !force && artifact::is_current(&manifest_path, &hash) {
        if let Ok(m) = artifact::read::<Manifest>(&manifest_path, "run") {
            if m.artifacts.iter().all(|a| out.join(a).exists()) {
                log::info!("{} is up to date", out.display());
                let artifacts = m.artifacts.iter().map(|a| out.join(a)).collect();
                return Ok(RunOutcome { skipped: true, converged: m.converged, artifacts });
            }
        }
    }
    let seeds = config.seeds();
    let tables = load_tables(config.tables.as_deref())?;
    let data = config.data.as_ref().expect("validated");
    let (input, mut warnings) = load_data(data)?;
    let choice = config.estimator_choice();
    let stamp = |stage: &str| (hash.clone(), stage.to_string());

    let mut set = ArtifactSet::default();
    log::info!("fitting {} classes with {}", input.labels().len(), choice.kind);
    let model = fit_stage(&input, &choice, &tables)?;
    let (h, s) = stamp("fit");
    let model_art = ModelArtifact { data: data.clone(), tables: config.tables.clone(), model, warnings: warnings.clone() };
    set.add(artifact::MODEL, artifact::to_json(&Artifact { config_hash: h, stage: s, content: &model_art }));

    let mut converged = true;
    let embedding = match &config.embedding {
        Some(cfg) => {
            let e = embed_stage(&model_art.model, cfg, seeds.embed)?;
            if !e.converged {
                converged = false;
                let w = format!("embedding stopped at the iteration cap (E = {:.3e})", e.objective);
                log::warn!("{w}");
                warnings.push(w);
            }
            let (h, s) = stamp("embed");
            set.add(artifact::EMBEDDING, artifact::to_json(&Artifact { config_hash: h, stage: s, content: &e }));
            Some(e)
        }
        None => None,
    };

    let report = match &config.inference {
        Some(cfg) => {
            let rc = cfg.resampling(seeds.infer)?;
            log::info!("running inference with {} resamples", rc.n_resamples);
            let r = infer_stage(&input, &choice, &tables, &rc)?;
            warnings.extend(r.errors.iter().map(|e| format!("{} test at ({}, {}) failed: {}", e.kind, e.row, e.col, e.message)));
            let (h, s) = stamp("infer");
            set.add(artifact::INFERENCE, artifact::to_json(&Artifact { config_hash: h, stage: s, content: &r }));
            Some(r)
        }
        None => None,
    };

    if let (Some(options), Some(e)) = (&config.render, &embedding) {
        for (p, body) in render_stage(e, report.as_ref(), options, &hash)? {
            set.add(p, body);
        }
    }

    let mut names = set.names();
    names.push(artifact::MANIFEST.to_string());
    let manifest = Manifest {
        config_hash: hash.clone(),
        config: config.clone(),
        seeds,
        versions: Versions::current(),
        artifacts: names,
        converged,
        warnings,
    };
    set.add(artifact::MANIFEST, artifact::to_json(&manifest));
    let artifacts = set.commit(out)?;
    Ok(RunOutcome { skipped: false, converged, artifacts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::InferenceConfig;
    use h2s_core::synthetic::{ScenarioKind, ScenarioSpec};

    fn config(out: &Path, inference: bool) -> RunConfig {
        RunConfig {
            data: Some(DataSource::Scenario(ScenarioSpec::named(ScenarioKind::Touching, 20, 40, 1.0, 5).unwrap())),
            inference: inference.then(|| InferenceConfig { resamples: 200, alpha_level: 0.05 }),
            out: out.to_path_buf(),
            ..Default::default()
        }
    }

    #[test]
    fn fit_only_skips_inference() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_pipeline(&config(dir.path(), false), false).unwrap();
        assert!(!out.skipped);
        assert!(dir.path().join("model.json").exists());
        assert!(dir.path().join("scene.svg").exists());
        assert!(!dir.path().join("inference.json").exists());
        assert!(!dir.path().join("diagrams/significance.svg").exists());
    }

    #[test]
    fn rerun_is_a_no_op_unless_forced() {
        let dir = tempfile::tempdir().unwrap();
        let c = config(dir.path(), true);
        let first = run_pipeline(&c, false).unwrap();
        assert!(first.artifacts.iter().any(|p| p.ends_with("diagrams/pairwise.svg")));
        assert!(run_pipeline(&c, false).unwrap().skipped);
        assert!(!run_pipeline(&c, true).unwrap().skipped);
    }

    #[test]
    fn failure_leaves_no_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = config(dir.path(), false);
        c.data = Some(DataSource::File(crate::ingest::FileSource {
            path: dir.path().join("missing.csv"),
            format: None,
            labels: None,
            space_dim: None,
        }));
        let err = run_pipeline(&c, false).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}
