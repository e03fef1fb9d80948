//! All pairwise tests of a dataset, laid out as in the inference diagrams.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::fdr::bh_adjust;
use super::{
    overlap_diff_test, overlap_test, radius_diff_test, separation_diff_test, separation_test,
    ResamplingConfig, TestKind, TestResult,
};
use crate::error::{Error, Result};
use crate::estimators::{fit_ensemble, CalibrationTables, EstimatorChoice};
use crate::geometry::{pairs, LabeledDataset, SummaryStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Matrix {
    FirstOrder,
    SecondOrder,
}

/// A test that failed; its cell is left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellError {
    pub matrix: Matrix,
    pub row: usize,
    pub col: usize,
    pub kind: TestKind,
    pub message: String,
}

/// Test results in matrix form.
///
/// `first_order` is `T × T`: separations below the diagonal, overlaps above
/// it, and an empty diagonal (radii are always significant and live in
/// `stats`). `second_order` is `K × K` over the `K = T(T-1)/2` class pairs
/// listed in `pairs`: radius differences of each pair on the diagonal,
/// separation differences below and overlap differences above, comparing the
/// row pair against the column pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceReport {
    pub labels: Vec<String>,
    pub estimator: EstimatorChoice,
    pub config: ResamplingConfig,
    pub fdr_alpha: f64,
    pub stats: SummaryStats,
    pub pairs: Vec<(usize, usize)>,
    pub first_order: Vec<Vec<Option<TestResult>>>,
    pub second_order: Vec<Vec<Option<TestResult>>>,
    pub errors: Vec<CellError>,
}

impl InferenceReport {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Every populated cell with its matrix and position.
    pub fn cells(&self) -> impl Iterator<Item = (Matrix, usize, usize, &TestResult)> {
        let first = self.first_order.iter().enumerate().flat_map(|(r, row)| {
            row.iter().enumerate().filter_map(move |(c, v)| v.as_ref().map(|t| (Matrix::FirstOrder, r, c, t)))
        });
        let second = self.second_order.iter().enumerate().flat_map(|(r, row)| {
            row.iter().enumerate().filter_map(move |(c, v)| v.as_ref().map(|t| (Matrix::SecondOrder, r, c, t)))
        });
        first.chain(second)
    }
}

/// Applies Benjamini–Hochberg within each test kind.
pub fn apply_fdr(report: &mut InferenceReport) {
    let alpha = report.fdr_alpha;
    for kind in TestKind::ALL {
        let mut cells: Vec<&mut TestResult> = report
            .first_order
            .iter_mut()
            .chain(report.second_order.iter_mut())
            .flatten()
            .flatten()
            .filter(|t| t.kind == kind)
            .collect();
        let p: Vec<f64> = cells.iter().map(|t| t.decision_p()).collect();
        for (t, q) in cells.iter_mut().zip(bh_adjust(&p)) {
            t.p_adjusted = q;
            t.significant = q <= alpha;
        }
    }
}

/// Runs every first- and second-order test on a point dataset.
///
/// Each test gets its own seed derived from the configured one and the
/// test's position, so results do not depend on execution order. A failing
/// test leaves an empty cell and an entry in `errors`.
pub fn full_inference(
    dataset: &LabeledDataset,
    choice: &EstimatorChoice,
    tables: &CalibrationTables,
    config: &ResamplingConfig,
) -> Result<InferenceReport> {
    config.validate()?;
    let t = dataset.len();
    if t < 2 {
        return Err(Error::InvalidArgument("inference needs at least two classes".into()));
    }
    let model = fit_ensemble(dataset.into(), choice, tables)?;
    let views: Vec<ArrayView2<'_, f64>> = dataset.views();
    let pair_list = pairs(t);
    let k = pair_list.len();
    let mut errors = Vec::new();
    let mut record = |matrix: Matrix, row: usize, col: usize, kind: TestKind, r: Result<TestResult>| match r {
        Ok(v) => Some(v),
        Err(e) => {
            log::warn!("{kind} test at ({row}, {col}) failed: {e}");
            errors.push(CellError { matrix, row, col, kind, message: e.to_string() });
            None
        }
    };

    let mut first_order = vec![vec![None; t]; t];
    for &(i, j) in &pair_list {
        let (ii, jj) = (i as u64, j as u64);
        let cfg = config.derived(&[TestKind::Separation.id(), ii, jj]);
        first_order[j][i] = record(
            Matrix::FirstOrder,
            j,
            i,
            TestKind::Separation,
            separation_test(views[i], views[j], &cfg),
        );
        let cfg = config.derived(&[TestKind::Overlap.id(), ii, jj]);
        first_order[i][j] = record(
            Matrix::FirstOrder,
            i,
            j,
            TestKind::Overlap,
            overlap_test(views[i], views[j], choice, tables, &cfg),
        );
    }

    let mut second_order = vec![vec![None; k]; k];
    for (a, &(i, j)) in pair_list.iter().enumerate() {
        let cfg = config.derived(&[TestKind::RadiusDiff.id(), i as u64, j as u64]);
        second_order[a][a] = record(
            Matrix::SecondOrder,
            a,
            a,
            TestKind::RadiusDiff,
            radius_diff_test(views[i], views[j], choice, tables, &cfg),
        );
        for col in 0..a {
            let row = a;
            let cfg = config.derived(&[TestKind::SeparationDiff.id(), row as u64, col as u64]);
            second_order[row][col] = record(
                Matrix::SecondOrder,
                row,
                col,
                TestKind::SeparationDiff,
                separation_diff_test(&views, pair_list[row], pair_list[col], choice, tables, &cfg),
            );
            let cfg = config.derived(&[TestKind::OverlapDiff.id(), col as u64, row as u64]);
            second_order[col][row] = record(
                Matrix::SecondOrder,
                col,
                row,
                TestKind::OverlapDiff,
                overlap_diff_test(&views, pair_list[col], pair_list[row], choice, tables, &cfg),
            );
        }
    }

    let mut report = InferenceReport {
        labels: model.labels,
        estimator: choice.clone(),
        config: *config,
        fdr_alpha: config.alpha_level,
        stats: model.stats,
        pairs: pair_list,
        first_order,
        second_order,
        errors,
    };
    apply_fdr(&mut report);
    Ok(report)
}
