//! Hinton-style diagrams of summary statistics and test results.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{close_svg, num, open_svg, text, RenderOptions};
use crate::error::{Error, Result};
use crate::geometry::SummaryStats;
use crate::inference::{InferenceReport, Matrix, TestResult};

/// Largest glyph radius as a fraction of the cell size.
const GLYPH_FRACTION: f64 = 0.45;
const SIG_FRACTION: f64 = 0.4;
const LABEL_BAND: f64 = 60.0;
const HIGH_COLOR: &str = "#3b3b3b";
const LOW_COLOR: &str = "#9a9a9a";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DiagramKind {
    /// Statistic values, high-dimensional next to visualized.
    Values,
    /// First-order significance (`T × T`).
    Significance,
    /// Second-order significance over class pairs.
    Pairwise,
}

impl DiagramKind {
    pub const ALL: [DiagramKind; 3] = [DiagramKind::Values, DiagramKind::Significance, DiagramKind::Pairwise];

    pub fn name(self) -> &'static str {
        match self {
            DiagramKind::Values => "values",
            DiagramKind::Significance => "significance",
            DiagramKind::Pairwise => "pairwise",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShadeLevel {
    Light,
    Medium,
    Dark,
}

impl ShadeLevel {
    pub fn color(self) -> &'static str {
        match self {
            ShadeLevel::Light => "#c6c6c6",
            ShadeLevel::Medium => "#7a7a7a",
            ShadeLevel::Dark => "#1e1e1e",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ShadeLevel::Light => "light",
            ShadeLevel::Medium => "medium",
            ShadeLevel::Dark => "dark",
        }
    }
}

/// Shade for a p-value: below 0.001 dark, below 0.01 medium, below 0.05
/// light, otherwise none.
pub fn significance_level(p: f64) -> Option<ShadeLevel> {
    if p < 0.001 {
        Some(ShadeLevel::Dark)
    } else if p < 0.01 {
        Some(ShadeLevel::Medium)
    } else if p < 0.05 {
        Some(ShadeLevel::Light)
    } else {
        None
    }
}

struct Grid {
    x0: f64,
    y0: f64,
    cell: f64,
}

impl Grid {
    fn new(size: usize, options: &RenderOptions) -> Self {
        let side = f64::from(options.width.min(options.height)) - 2.0 * options.margin - LABEL_BAND;
        let x0 = options.margin + LABEL_BAND;
        Self { x0, y0: x0, cell: side.max(1.0) / size.max(1) as f64 }
    }

    fn center(&self, row: usize, col: usize) -> (f64, f64) {
        (self.x0 + (col as f64 + 0.5) * self.cell, self.y0 + (row as f64 + 0.5) * self.cell)
    }

    fn draw(&self, out: &mut String, labels: &[String], options: &RenderOptions) {
        let k = labels.len();
        out.push_str("<g class=\"grid\">\n");
        for row in 0..k {
            for col in 0..k {
                let fill = if row == col { "#f2f2f2" } else { "#ffffff" };
                writeln!(
                    out,
                    r##"<rect class="cell" x="{}" y="{}" width="{}" height="{}" fill="{fill}" stroke="#d0d0d0" stroke-width="1"/>"##,
                    num(self.x0 + col as f64 * self.cell),
                    num(self.y0 + row as f64 * self.cell),
                    num(self.cell),
                    num(self.cell)
                )
                .unwrap();
            }
        }
        let size = options.font_size.min(self.cell * 0.5);
        for (i, l) in labels.iter().enumerate() {
            let (cx, cy) = self.center(i, i);
            text(out, cx, self.y0 - size * 0.6, "middle", size, l);
            text(out, self.x0 - size * 0.4, cy + size / 3.0, "end", size, l);
        }
        out.push_str("</g>\n");
    }
}

/// Left or right half of a circle (positive value) or square (negative).
fn half_glyph(out: &mut String, (cx, cy): (f64, f64), radius: f64, left: bool, value: f64, row: usize, col: usize) {
    let side = if left { "left" } else { "right" };
    let color = if left { HIGH_COLOR } else { LOW_COLOR };
    let attrs = format!(r#"data-row="{row}" data-col="{col}" data-value="{value:e}""#);
    if value > 0.0 {
        let sweep = if left { 0 } else { 1 };
        writeln!(
            out,
            r#"<path class="glyph circle {side}" {attrs} d="M {} {} A {r} {r} 0 0 {sweep} {} {} Z" fill="{color}"/>"#,
            num(cx),
            num(cy - radius),
            num(cx),
            num(cy + radius),
            r = num(radius),
        )
        .unwrap();
    } else {
        let x = if left { cx - radius } else { cx };
        writeln!(
            out,
            r#"<rect class="glyph square {side}" {attrs} x="{}" y="{}" width="{}" height="{}" fill="{color}"/>"#,
            num(x),
            num(cy - radius),
            num(radius),
            num(2.0 * radius)
        )
        .unwrap();
    }
}

fn cell_value(s: &SummaryStats, row: usize, col: usize) -> f64 {
    match row.cmp(&col) {
        std::cmp::Ordering::Equal => s.radius(row),
        std::cmp::Ordering::Greater => s.distance(row, col),
        std::cmp::Ordering::Less => s.margin(row, col),
    }
}

/// Values diagram: radii on the diagonal, separations below and margins
/// above it. Each cell holds the high-dimensional value as a left half-glyph
/// and the visualized value as a right half-glyph; circles are positive,
/// squares negative, and glyph radius is proportional to magnitude on one
/// scale shared by the whole diagram. Zero values draw nothing.
pub fn render_values_diagram(
    high: &SummaryStats,
    embedded: &SummaryStats,
    labels: &[String],
    options: &RenderOptions,
) -> Result<String> {
    options.validate()?;
    let t = high.len();
    if embedded.len() != t || labels.len() != t {
        return Err(Error::InvalidArgument(format!(
            "values diagram needs matching sizes, got {t} targets, {} embedded, {} labels",
            embedded.len(),
            labels.len()
        )));
    }
    let grid = Grid::new(t, options);
    let cells: Vec<(usize, usize, f64, f64)> = (0..t)
        .flat_map(|r| (0..t).map(move |c| (r, c)))
        .map(|(r, c)| (r, c, cell_value(high, r, c), cell_value(embedded, r, c)))
        .collect();
    let max = cells.iter().flat_map(|&(_, _, a, b)| [a.abs(), b.abs()]).fold(0.0_f64, f64::max);
    let mut out = String::new();
    open_svg(&mut out, options);
    grid.draw(&mut out, labels, options);
    out.push_str("<g class=\"marks\">\n");
    if max > 0.0 && max.is_finite() {
        let unit = GLYPH_FRACTION * grid.cell / max;
        for (r, c, a, b) in cells {
            for (left, v) in [(true, a), (false, b)] {
                if v.abs() > 1e-12 * max {
                    half_glyph(&mut out, grid.center(r, c), unit * v.abs(), left, v, r, c);
                }
            }
        }
    }
    out.push_str("</g>\n");
    close_svg(&mut out);
    Ok(out)
}

fn sig_glyph(out: &mut String, center: (f64, f64), radius: f64, result: &TestResult, row: usize, col: usize) {
    if !result.significant {
        return;
    }
    let level = significance_level(result.p_adjusted).unwrap_or(ShadeLevel::Light);
    writeln!(
        out,
        r#"<circle class="glyph {}" data-row="{row}" data-col="{col}" data-kind="{}" data-p="{:e}" cx="{}" cy="{}" r="{}" fill="{}"/>"#,
        level.name(),
        result.kind.name(),
        result.p_adjusted,
        num(center.0),
        num(center.1),
        num(radius),
        level.color()
    )
    .unwrap();
}

/// Significance diagram for one matrix of the report. A cell holds a circle
/// when its test is significant after FDR correction, shaded by the adjusted
/// p-value (see [`significance_level`]). The first-order grid is `T × T`
/// with separations below and overlaps above the diagonal; the second-order
/// grid is indexed by class pairs with radius differences on the diagonal,
/// separation differences below and overlap differences above it.
pub fn render_significance_diagram(report: &InferenceReport, matrix: Matrix, options: &RenderOptions) -> Result<String> {
    options.validate()?;
    let (cells, labels): (&Vec<Vec<Option<TestResult>>>, Vec<String>) = match matrix {
        Matrix::FirstOrder => (&report.first_order, report.labels.clone()),
        Matrix::SecondOrder => (
            &report.second_order,
            report.pairs.iter().map(|&(i, j)| format!("{}-{}", report.labels[i], report.labels[j])).collect(),
        ),
    };
    if cells.len() != labels.len() || cells.iter().any(|r| r.len() != labels.len()) {
        return Err(Error::InvalidArgument("report matrix is not square".into()));
    }
    let grid = Grid::new(labels.len(), options);
    let mut out = String::new();
    open_svg(&mut out, options);
    grid.draw(&mut out, &labels, options);
    out.push_str("<g class=\"marks\">\n");
    for (r, row) in cells.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            if let Some(result) = cell {
                sig_glyph(&mut out, grid.center(r, c), SIG_FRACTION * grid.cell, result, r, c);
            }
        }
    }
    out.push_str("</g>\n");
    close_svg(&mut out);
    Ok(out)
}
