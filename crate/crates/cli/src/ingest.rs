//! Reading datasets from disk.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use h2s_core::{DistanceDataset, LabeledClass, LabeledDataset};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Relative asymmetry of a distance matrix that is silently repaired.
pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    /// One point per row: label, then coordinates.
    Csv,
    /// `{"classes": [{"label": ..., "points": [[...], ...]}, ...]}`.
    Json,
    /// Square distance matrix CSV plus a label file.
    Distances,
}

impl Format {
    /// Guesses from the extension, treating CSV as a distance matrix when a
    /// label file is given.
    pub fn detect(path: &Path, has_labels: bool) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ if has_labels => Format::Distances,
            _ => Format::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Points(LabeledDataset),
    Distances(DistanceDataset),
}

impl Input {
    pub fn labels(&self) -> Vec<String> {
        match self {
            Input::Points(d) => d.labels(),
            Input::Distances(d) => d.class_labels(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub input: Input,
    pub warnings: Vec<String>,
}

fn input_error(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Input { path: path.to_path_buf(), message: message.into() }
}

fn records(path: &Path) -> CliResult<Vec<(u64, csv::StringRecord)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| input_error(path, e.to_string()))?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| input_error(path, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        out.push((line, rec));
    }
    Ok(out)
}

fn parse_cell(path: &Path, line: u64, col: usize, cell: &str) -> CliResult<f64> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(input_error(path, format!("line {line}, column {col}: non-finite value `{cell}`"))),
        Err(_) => Err(input_error(path, format!("line {line}, column {col}: `{cell}` is not a number"))),
    }
}

/// Labeled point CSV. A first row whose coordinates are not numeric is taken
/// as a header. Classes keep their order of first appearance.
pub fn read_points_csv(path: &Path) -> CliResult<LabeledDataset> {
    let mut recs = records(path)?;
    if let Some((_, first)) = recs.first() {
        if first.iter().skip(1).any(|c| c.parse::<f64>().is_err()) {
            recs.remove(0);
        }
    }
    let Some((_, first)) = recs.first() else {
        return Err(input_error(path, "no data rows"));
    };
    let width = first.len();
    if width < 2 {
        return Err(input_error(path, "rows need a label and at least one coordinate"));
    }
    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, Vec<f64>> = HashMap::new();
    for (line, rec) in &recs {
        if rec.len() != width {
            return Err(input_error(path, format!("line {line}: expected {width} columns, found {}", rec.len())));
        }
        let label = rec[0].to_string();
        if label.is_empty() {
            return Err(input_error(path, format!("line {line}: empty label")));
        }
        let entry = rows.entry(label.clone()).or_insert_with(|| {
            order.push(label);
            Vec::new()
        });
        for (col, cell) in rec.iter().enumerate().skip(1) {
            entry.push(parse_cell(path, *line, col + 1, cell)?);
        }
    }
    let n = width - 1;
    let classes = order
        .into_iter()
        .map(|label| {
            let flat = rows.remove(&label).expect("label recorded");
            let points = Array2::from_shape_vec((flat.len() / n, n), flat).expect("rows have equal width");
            LabeledClass { label, points }
        })
        .collect();
    LabeledDataset::new(classes).map_err(|e| input_error(path, e.to_string()))
}

pub fn read_points_json(path: &Path) -> CliResult<LabeledDataset> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| input_error(path, e.to_string()))
}

/// Reads a square distance matrix and one label per line. Asymmetries up to
/// [`SYMMETRY_TOL`] relative to the larger entry are averaged away with a
/// warning; larger ones are rejected. The diagonal must be zero to the same
/// tolerance relative to the largest distance.
pub fn read_distances(matrix: &Path, labels: &Path, dim: usize) -> CliResult<(DistanceDataset, Vec<String>)> {
    let label_text = fs::read_to_string(labels).map_err(CliError::io(labels))?;
    let names: Vec<String> = label_text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
    let recs = records(matrix)?;
    let p = recs.len();
    if p != names.len() {
        return Err(input_error(matrix, format!("{p} matrix rows but {} labels in {}", names.len(), labels.display())));
    }
    let mut d = Array2::<f64>::zeros((p, p));
    for (i, (line, rec)) in recs.iter().enumerate() {
        if rec.len() != p {
            return Err(input_error(matrix, format!("line {line}: expected {p} columns, found {}", rec.len())));
        }
        for (j, cell) in rec.iter().enumerate() {
            d[[i, j]] = parse_cell(matrix, *line, j + 1, cell)?;
        }
    }
    let max = d.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let mut warnings = Vec::new();
    let mut worst = 0.0_f64;
    for i in 0..p {
        if d[[i, i]].abs() > SYMMETRY_TOL * max {
            return Err(input_error(matrix, format!("diagonal entry {} is {}", i + 1, d[[i, i]])));
        }
        d[[i, i]] = 0.0;
        for j in 0..i {
            let (a, b) = (d[[i, j]], d[[j, i]]);
            if a != b {
                let rel = (a - b).abs() / a.abs().max(b.abs());
                if rel > SYMMETRY_TOL {
                    return Err(input_error(
                        matrix,
                        format!("entries ({}, {}) and ({}, {}) differ by {rel:.3e} relative", i + 1, j + 1, j + 1, i + 1),
                    ));
                }
                worst = worst.max(rel);
                let m = 0.5 * (a + b);
                d[[i, j]] = m;
                d[[j, i]] = m;
            }
        }
    }
    if worst > 0.0 {
        let w = format!("distance matrix symmetrized (largest relative asymmetry {worst:.3e})");
        log::warn!("{}: {w}", matrix.display());
        warnings.push(w);
    }
    let ds = DistanceDataset::new(names, d, dim).map_err(|e| input_error(matrix, e.to_string()))?;
    Ok((ds, warnings))
}

/// Where a dataset comes from on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileSource {
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Label file for distance matrices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    /// Dimension of the space a distance matrix was measured in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space_dim: Option<usize>,
}

pub fn ingest(source: &FileSource) -> CliResult<Ingested> {
    let path = &source.path;
    let format = source.format.unwrap_or_else(|| Format::detect(path, source.labels.is_some()));
    let (input, warnings) = match format {
        Format::Csv => (Input::Points(read_points_csv(path)?), vec![]),
        Format::Json => (Input::Points(read_points_json(path)?), vec![]),
        Format::Distances => {
            let labels = source
                .labels
                .as_ref()
                .ok_or_else(|| CliError::Config("distance input needs a label file".into()))?;
            let dim = source
                .space_dim
                .ok_or_else(|| CliError::Config("distance input needs the dimension of the original space".into()))?;
            let (ds, w) = read_distances(path, labels, dim)?;
            (Input::Distances(ds), w)
        }
    };
    Ok(Ingested { input, warnings })
}

/// Resolves relative paths in `source` against `base`.
pub fn resolve(source: &FileSource, base: &Path) -> FileSource {
    let join = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
    FileSource {
        path: join(&source.path),
        format: source.format,
        labels: source.labels.as_ref().map(join),
        space_dim: source.space_dim,
    }
}
