//! SVG output: the sphere scene and the three inference diagrams.
//!
//! All output is deterministic. Coordinates are written with a fixed number
//! of decimals and elements are emitted in a fixed order, so identical inputs
//! produce byte-identical files.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod diagram;
pub mod scene;

pub use diagram::{render_significance_diagram, render_values_diagram, significance_level, DiagramKind, ShadeLevel};
pub use scene::{render_scene, RenderedScene, Scene, SceneSphere, SignFlip};

/// Qualitative palette assigned to classes in label order.
pub const TABLEAU_10: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderOptions {
    pub width: u32,
    pub height: u32,
    pub margin: f64,
    /// Class colors, cycled when there are more classes than entries.
    pub palette: Vec<String>,
    pub fill_opacity: f64,
    pub font_size: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            width: 800,
            height: 800,
            margin: 40.0,
            palette: TABLEAU_10.iter().map(|s| s.to_string()).collect(),
            fill_opacity: 0.35,
            font_size: 14.0,
        }
    }
}

impl RenderOptions {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument("canvas size must be positive".into()));
        }
        let inner = f64::from(self.width.min(self.height)) - 2.0 * self.margin;
        if !(self.margin >= 0.0 && inner > 0.0) {
            return Err(Error::InvalidArgument("margin leaves no drawing area".into()));
        }
        if self.palette.is_empty() {
            return Err(Error::InvalidArgument("palette is empty".into()));
        }
        if !(0.0..=1.0).contains(&self.fill_opacity) {
            return Err(Error::InvalidArgument("fill opacity must be in [0, 1]".into()));
        }
        if !(self.font_size > 0.0 && self.font_size.is_finite()) {
            return Err(Error::InvalidArgument("font size must be positive".into()));
        }
        Ok(())
    }

    pub fn color(&self, class: usize) -> &str {
        &self.palette[class % self.palette.len()]
    }
}

/// Formats a coordinate with three decimals, without a negative zero.
pub(crate) fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

pub(crate) fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

pub(crate) fn open_svg(out: &mut String, options: &RenderOptions) {
    let (w, h) = (options.width, options.height);
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    writeln!(out, r##"<rect class="background" x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>"##).unwrap();
}

pub(crate) fn close_svg(out: &mut String) {
    out.push_str("</svg>\n");
}

pub(crate) fn text(out: &mut String, x: f64, y: f64, anchor: &str, size: f64, body: &str) {
    writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="{anchor}" font-family="sans-serif" font-size="{}">{}</text>"#,
        num(x),
        num(y),
        num(size),
        escape(body)
    )
    .unwrap();
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(-0.0001), "0.000");
        assert_eq!(num(1.23456), "1.235");
        assert_eq!(num(-2.5), "-2.500");
    }

    #[test]
    fn escapes_markup() {
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }

    #[test]
    fn options_validation() {
        assert!(RenderOptions::default().validate().is_ok());
        let bad = RenderOptions { margin: 500.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = RenderOptions { palette: vec![], ..Default::default() };
        assert!(bad.validate().is_err());
        assert_eq!(RenderOptions::default().color(11), "#f28e2b");
    }
}
