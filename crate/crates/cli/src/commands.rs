//! Command-line interface.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use h2s_core::estimators::{EstimatorChoice, EstimatorKind};
use h2s_core::inference::TestKind;
use h2s_core::render::RenderOptions;
use h2s_core::synthetic::{
    calibration_fpr, derive_xi, derive_zeta, estimator_benchmark, generate_scenario, rows_to_csv, BenchConfig,
    BenchEstimator, Distribution, NullSpec, ScenarioKind, ScenarioSpec,
};
use h2s_core::estimators::CalibrationTables;
use serde::Serialize;

use crate::artifact::{self, Artifact, ArtifactSet, EmbeddingFile, InferenceFile, ModelArtifact, ModelFile};
use crate::config::{content_hash, load_tables, DataSource, EmbedConfig, InferenceConfig, RunConfig, Seeds};
use crate::error::{CliError, CliResult};
use crate::ingest::{FileSource, Format};
use crate::pipeline::{embed_stage, fit_stage, infer_stage, load_data, render_stage, run_pipeline};

#[derive(Debug, Parser)]
#[command(name = "h2s", version, about = "Hypersphere models of labeled high-dimensional data")]
pub struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one hypersphere per class and write model.json.
    Fit(FitArgs),
    /// Embed the fitted model in 2D or 3D and write embedding.json.
    Embed(EmbedArgs),
    /// Run all significance tests and write inference.json.
    Infer(InferArgs),
    /// Render scene.svg, scene.json and diagrams/*.svg.
    Render(RenderArgs),
    /// Run every stage from a JSON config file.
    Run(RunArgs),
    /// Generate a synthetic dataset with known geometry.
    Simulate(SimulateArgs),
    /// Benchmark radius estimators on synthetic data (CSV).
    Bench(BenchArgs),
    /// Estimate false-positive rates of a test on simulated nulls (CSV).
    Calibrate(CalibrateArgs),
    /// Re-derive the calibration tables by simulation.
    DeriveTables(DeriveArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory; stages read their inputs from it too.
    #[arg(long, default_value = "h2s-out")]
    pub out: PathBuf,
    /// Master seed; each stage derives its own seed from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Recompute even if the output matches the configuration.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Label file (one per line) for a distance matrix input.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Dimension of the space a distance matrix was measured in.
    #[arg(long)]
    pub space_dim: Option<usize>,
    #[arg(long, default_value_t = EstimatorKind::default())]
    pub estimator: EstimatorKind,
    #[arg(long, default_value_t = EstimatorChoice::default().mcmc_samples)]
    pub mcmc_samples: usize,
    /// Calibration tables JSON replacing the built-in ones.
    #[arg(long)]
    pub tables: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Weight of the margin term.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Weight of the radius term.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long)]
    pub mds_only: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long, default_value_t = InferenceConfig::default().resamples)]
    pub resamples: usize,
    #[arg(long, default_value_t = InferenceConfig::default().alpha_level)]
    pub alpha_level: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// JSON render options (canvas size, margin, palette, ...).
    #[arg(long)]
    pub options: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the output directory of the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = ScenarioKind::Touching)]
    pub scenario: ScenarioKind,
    #[arg(long, default_value_t = 200)]
    pub dim: usize,
    /// Points per class (ignored by IMBALANCED).
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = Distribution::Ball)]
    pub distribution: Distribution,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "h2s-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated estimators (default: all but MCMC, plus MEAN_D2C).
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<BenchEstimator>>,
    #[arg(long, value_delimiter = ',')]
    pub distributions: Option<Vec<Distribution>>,
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub p_grid: Option<Vec<usize>>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub tables: Option<PathBuf>,
    #[arg(long, default_value = "bench.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub test: TestKind,
    #[arg(long, default_value_t = 10)]
    pub dim: usize,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = Distribution::Ball)]
    pub distribution: Distribution,
    #[arg(long, default_value_t = 400)]
    pub sims: usize,
    #[arg(long, default_value_t = 1000)]
    pub resamples: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha_level: f64,
    #[arg(long, default_value_t = EstimatorKind::default())]
    pub estimator: EstimatorKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "calibration.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DeriveArgs {
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "tables.json")]
    pub out: PathBuf,
}

/// What a command did, for the exit status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Done,
    UpToDate,
    /// Artifacts were written but the embedding did not converge.
    NotConverged,
}

fn write(path: &Path, body: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(CliError::io(parent))?;
    }
    fs::write(path, body).map_err(CliError::io(path))
}

fn stage_hash<T: Serialize>(stage: &str, params: &T, upstream: Option<&str>) -> String {
    content_hash(&(stage, params, upstream))
}

fn stamped<T: Serialize>(hash: &str, stage: &str, content: &T) -> String {
    artifact::to_json(&Artifact { config_hash: hash.to_string(), stage: stage.to_string(), content })
}

fn fit(args: FitArgs) -> CliResult<Status> {
    let source = FileSource { path: args.input, format: args.format, labels: args.labels, space_dim: args.space_dim };
    let data = DataSource::File(source);
    let choice = EstimatorChoice {
        kind: args.estimator,
        mcmc_samples: args.mcmc_samples,
        seed: Seeds::from_master(args.common.seed).fit,
    };
    choice.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let hash = stage_hash("fit", &(&data, &choice, &args.tables), None);
    let path = args.common.out.join(artifact::MODEL);
    if !args.common.force && artifact::is_current(&path, &hash) {
        return Ok(Status::UpToDate);
    }
    let tables = load_tables(args.tables.as_deref())?;
    let (input, warnings) = load_data(&data)?;
    let model = fit_stage(&input, &choice, &tables)?;
    let content = ModelArtifact { data, tables: args.tables, model, warnings };
    let mut set = ArtifactSet::default();
    set.add(artifact::MODEL, stamped(&hash, "fit", &content));
    set.commit(&args.common.out)?;
    Ok(Status::Done)
}

fn embed(args: EmbedArgs) -> CliResult<Status> {
    let out = &args.common.out;
    let model: ModelFile = artifact::read(&out.join(artifact::MODEL), "fit")?;
    let cfg = EmbedConfig { dim: args.dim, alpha: args.alpha, beta: args.beta, mds_only: args.mds_only };
    cfg.validate()?;
    let seed = Seeds::from_master(args.common.seed).embed;
    let hash = stage_hash("embed", &(&cfg, seed), Some(&model.config_hash));
    let path = out.join(artifact::EMBEDDING);
    if !args.common.force && artifact::is_current(&path, &hash) {
        return Ok(Status::UpToDate);
    }
    let e = embed_stage(&model.content.model, &cfg, seed)?;
    let mut set = ArtifactSet::default();
    set.add(artifact::EMBEDDING, stamped(&hash, "embed", &e));
    set.commit(out)?;
    Ok(if e.converged { Status::Done } else { Status::NotConverged })
}

fn infer(args: InferArgs) -> CliResult<Status> {
    let out = &args.common.out;
    let model: ModelFile = artifact::read(&out.join(artifact::MODEL), "fit")?;
    let rc = InferenceConfig { resamples: args.resamples, alpha_level: args.alpha_level }
        .resampling(Seeds::from_master(args.common.seed).infer)?;
    let hash = stage_hash("infer", &rc, Some(&model.config_hash));
    let path = out.join(artifact::INFERENCE);
    if !args.common.force && artifact::is_current(&path, &hash) {
        return Ok(Status::UpToDate);
    }
    let m = &model.content;
    let tables = load_tables(m.tables.as_deref())?;
    let (input, _) = load_data(&m.data)?;
    let report = infer_stage(&input, &m.model.estimator, &tables, &rc)?;
    let mut set = ArtifactSet::default();
    set.add(artifact::INFERENCE, stamped(&hash, "infer", &report));
    set.commit(out)?;
    Ok(Status::Done)
}

fn render(args: RenderArgs) -> CliResult<Status> {
    let out = &args.common.out;
    let embedding: EmbeddingFile = artifact::read(&out.join(artifact::EMBEDDING), "embed")?;
    let inference_path = out.join(artifact::INFERENCE);
    let report: Option<InferenceFile> =
        if inference_path.exists() { Some(artifact::read(&inference_path, "infer")?) } else { None };
    let options: RenderOptions = match &args.options {
        None => RenderOptions::default(),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(CliError::io(p))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
    };
    options.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let upstream = format!("{}:{}", embedding.config_hash, report.as_ref().map_or("", |r| r.config_hash.as_str()));
    let hash = stage_hash("render", &options, Some(&upstream));
    if !args.common.force && artifact::is_current(&out.join(artifact::SCENE_JSON), &hash) {
        return Ok(Status::UpToDate);
    }
    let mut set = ArtifactSet::default();
    for (p, body) in render_stage(&embedding.content, report.as_ref().map(|r| &r.content), &options, &hash)? {
        set.add(p, body);
    }
    set.commit(out)?;
    Ok(Status::Done)
}

fn run(args: RunArgs) -> CliResult<Status> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(out) = args.out {
        cfg.out = out;
    }
    let outcome = run_pipeline(&cfg, args.force)?;
    Ok(match (outcome.skipped, outcome.converged) {
        (_, false) => Status::NotConverged,
        (true, true) => Status::UpToDate,
        (false, true) => Status::Done,
    })
}

fn simulate(args: SimulateArgs) -> CliResult<Status> {
    let spec = ScenarioSpec::named(args.scenario, args.dim, args.samples, args.radius, args.seed)
        .map_err(|e| CliError::Config(e.to_string()))?
        .with_distribution(args.distribution);
    let s = generate_scenario(&spec).map_err(CliError::stage("simulate"))?;
    let mut set = ArtifactSet::default();
    set.add("dataset.json", artifact::to_json(&s.dataset));
    set.add("truth.json", artifact::to_json(&(&spec, &s.truth)));
    set.commit(&args.out)?;
    Ok(Status::Done)
}

fn bench(args: BenchArgs) -> CliResult<Status> {
    let d = BenchConfig::default();
    let config = BenchConfig {
        estimators: args.estimators.unwrap_or(d.estimators),
        distributions: args.distributions.unwrap_or(d.distributions),
        n_grid: args.n_grid.unwrap_or(d.n_grid),
        p_grid: args.p_grid.unwrap_or(d.p_grid),
        repetitions: args.reps.unwrap_or(d.repetitions),
        seed: args.seed,
    };
    let tables = load_tables(args.tables.as_deref())?;
    let rows = estimator_benchmark(&config, &tables).map_err(CliError::stage("bench"))?;
    write(&args.out, &rows_to_csv(&rows).map_err(CliError::stage("bench"))?)?;
    Ok(Status::Done)
}

fn calibrate(args: CalibrateArgs) -> CliResult<Status> {
    let null = NullSpec { dim: args.dim, samples: args.samples, radius: args.radius, distribution: args.distribution };
    let choice = EstimatorChoice { seed: args.seed, ..EstimatorChoice::new(args.estimator) };
    let rc = InferenceConfig { resamples: args.resamples, alpha_level: args.alpha_level }.resampling(args.seed)?;
    let r = calibration_fpr(args.test, &null, args.sims, &choice, &CalibrationTables::default(), &rc)
        .map_err(CliError::stage("calibrate"))?;
    if r.flagged {
        log::warn!("{} points per class is above the range where the {} test is validated", args.samples, args.test);
    }
    write(&args.out, &rows_to_csv(&[r.to_row()]).map_err(CliError::stage("calibrate"))?)?;
    Ok(Status::Done)
}

fn derive_tables(args: DeriveArgs) -> CliResult<Status> {
    let defaults = CalibrationTables::default();
    let grid = |keys: Vec<u32>| keys.into_iter().map(|k| k as usize).collect::<Vec<_>>();
    let xi = derive_xi(&grid(defaults.xi_table().keys().copied().collect()), args.reps, args.seed)
        .map_err(CliError::stage("derive-tables"))?;
    let zeta = derive_zeta(&grid(defaults.inv_zeta_table().keys().copied().collect()), args.reps, args.seed)
        .map_err(CliError::stage("derive-tables"))?;
    let tables = CalibrationTables::new(xi, zeta).map_err(CliError::stage("derive-tables"))?;
    write(&args.out, &tables.to_json())?;
    Ok(Status::Done)
}

pub fn execute(command: Command) -> CliResult<Status> {
    match command {
        Command::Fit(a) => fit(a),
        Command::Embed(a) => embed(a),
        Command::Infer(a) => infer(a),
        Command::Render(a) => render(a),
        Command::Run(a) => run(a),
        Command::Simulate(a) => simulate(a),
        Command::Bench(a) => bench(a),
        Command::Calibrate(a) => calibrate(a),
        Command::DeriveTables(a) => derive_tables(a),
    }
}

/// Caps rayon's thread pool at `H2S_THREADS` when set.
pub fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("H2S_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("H2S_THREADS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flags() {
        let cli = Cli::try_parse_from([
            "h2s", "embed", "--dim", "3", "--alpha", "2", "--beta", "0.5", "--out", "x", "--seed", "9",
        ])
        .unwrap();
        match cli.command {
            Command::Embed(a) => {
                assert_eq!(a.dim, 3);
                assert_eq!(a.common.seed, 9);
                assert_eq!(a.common.out, PathBuf::from("x"));
            }
            c => panic!("{c:?}"),
        }
        let cli = Cli::try_parse_from(["h2s", "bench", "--estimators", "DCB2,MEAN_D2C", "--n-grid", "2,4"]).unwrap();
        match cli.command {
            Command::Bench(a) => {
                assert_eq!(a.estimators.unwrap(), vec![BenchEstimator::Fitted(EstimatorKind::Dcb2), BenchEstimator::MEAN_D2C]);
                assert_eq!(a.n_grid.unwrap(), vec![2, 4]);
            }
            c => panic!("{c:?}"),
        }
        assert!(Cli::try_parse_from(["h2s", "fit", "--input", "a.csv", "--estimator", "NOPE"]).is_err());
    }

    #[test]
    fn infer_default_resamples() {
        let cli = Cli::try_parse_from(["h2s", "infer"]).unwrap();
        match cli.command {
            Command::Infer(a) => assert_eq!(a.resamples, 5000),
            c => panic!("{c:?}"),
        }
    }
}
