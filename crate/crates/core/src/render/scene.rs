//! The sphere scene: circles in 2D, shaded discs under orthographic
//! projection in 3D.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{close_svg, escape, num, open_svg, text, RenderOptions};
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::inference::{InferenceReport, TestKind};

/// Relative threshold on the objective below which the error bar is hidden.
pub const ERROR_BAR_TOL: f64 = 1e-9;

/// A pair whose visualized margin has the opposite sign of its target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignFlip {
    pub i: usize,
    pub j: usize,
    pub visualized: f64,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSphere {
    pub label: String,
    pub color: String,
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Machine-readable scene. Centers and radii are the embedding's own values
/// in its length units; `scale` and `origin` map them to pixels via
/// `px = origin + scale * (x, -y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub n: usize,
    pub width: u32,
    pub height: u32,
    pub scale: f64,
    pub origin: [f64; 2],
    pub spheres: Vec<SceneSphere>,
    pub sign_flips: Vec<SignFlip>,
    pub objective: f64,
    /// Length of the error bar in embedding units (`sqrt(E)`), absent when
    /// the bar is hidden.
    pub error_bar: Option<f64>,
}

impl Scene {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::InvalidArgument(format!("scene JSON: {e}")))
    }

    fn to_px(&self, x: f64, y: f64) -> (f64, f64) {
        (self.origin[0] + self.scale * x, self.origin[1] - self.scale * y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedScene {
    pub svg: String,
    pub scene: Scene,
}

/// Pairs whose visualized margin differs in sign from the target margin.
/// With a report, only pairs whose overlap test is significant after FDR
/// correction are considered.
fn sign_flips(embedding: &Embedding, report: Option<&InferenceReport>) -> Vec<SignFlip> {
    let significant = |i: usize, j: usize| match report {
        None => true,
        Some(r) => r
            .first_order
            .get(i)
            .and_then(|row| row.get(j))
            .and_then(|c| c.as_ref())
            .is_some_and(|t| t.kind == TestKind::Overlap && t.significant),
    };
    embedding
        .target
        .pairs()
        .into_iter()
        .filter_map(|(i, j)| {
            let target = embedding.target.margin(i, j);
            let visualized = embedding.achieved.margin(i, j);
            let flipped = target.signum() != visualized.signum() && target != 0.0;
            (flipped && significant(i, j)).then_some(SignFlip { i, j, visualized, target })
        })
        .collect()
}

fn layout(embedding: &Embedding, options: &RenderOptions) -> (f64, [f64; 2]) {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for (c, &r) in embedding.centers.iter().zip(&embedding.radii) {
        for k in 0..2 {
            lo[k] = lo[k].min(c[k] - r);
            hi[k] = hi[k].max(c[k] + r);
        }
    }
    let avail_w = f64::from(options.width) - 2.0 * options.margin;
    let avail_h = f64::from(options.height) - 2.0 * options.margin;
    let (ext_w, ext_h) = (hi[0] - lo[0], hi[1] - lo[1]);
    let scale = match (ext_w > 0.0, ext_h > 0.0) {
        (true, true) => (avail_w / ext_w).min(avail_h / ext_h),
        (true, false) => avail_w / ext_w,
        (false, true) => avail_h / ext_h,
        (false, false) => 1.0,
    };
    let mid = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    let origin = [
        f64::from(options.width) / 2.0 - scale * mid[0],
        f64::from(options.height) / 2.0 + scale * mid[1],
    ];
    (scale, origin)
}

/// Renders an embedding as SVG together with its JSON scene.
///
/// In 2D each class is a filled translucent circle. In 3D spheres are
/// projected onto the first two axes and drawn back to front (increasing
/// third coordinate) as radially shaded discs. Sign-flip markers are line
/// segments on the line joining the two centers whose length is the margin
/// error. The error bar has length `sqrt(E)` and is omitted when
/// `E < 1e-9 * scale^2`.
pub fn render_scene(
    embedding: &Embedding,
    report: Option<&InferenceReport>,
    options: &RenderOptions,
) -> Result<RenderedScene> {
    options.validate()?;
    if embedding.n != 2 && embedding.n != 3 {
        return Err(Error::InvalidArgument(format!("cannot render a {}-dimensional embedding", embedding.n)));
    }
    if embedding.is_empty() {
        return Err(Error::Empty("embedding"));
    }
    let finite = embedding.centers.iter().flatten().chain(&embedding.radii).all(|v| v.is_finite())
        && embedding.objective.is_finite();
    if !finite {
        return Err(Error::NonFinite("embedding"));
    }
    let (scale, origin) = layout(embedding, options);
    let len_scale = embedding.scale();
    let error_bar = (embedding.objective >= ERROR_BAR_TOL * len_scale * len_scale).then(|| embedding.objective.sqrt());
    let scene = Scene {
        n: embedding.n,
        width: options.width,
        height: options.height,
        scale,
        origin,
        spheres: (0..embedding.len())
            .map(|i| SceneSphere {
                label: embedding.labels[i].clone(),
                color: options.color(i).to_string(),
                center: embedding.centers[i].clone(),
                radius: embedding.radii[i],
            })
            .collect(),
        sign_flips: sign_flips(embedding, report),
        objective: embedding.objective,
        error_bar,
    };
    let svg = scene_svg(&scene, options);
    Ok(RenderedScene { svg, scene })
}

fn scene_svg(scene: &Scene, options: &RenderOptions) -> String {
    let mut out = String::new();
    open_svg(&mut out, options);
    let mut order: Vec<usize> = (0..scene.spheres.len()).collect();
    if scene.n == 3 {
        out.push_str("<defs>\n");
        for (i, s) in scene.spheres.iter().enumerate() {
            writeln!(
                out,
                r##"<radialGradient id="shade-{i}" cx="0.35" cy="0.35" r="0.65"><stop offset="0" stop-color="#ffffff"/><stop offset="1" stop-color="{}"/></radialGradient>"##,
                s.color
            )
            .unwrap();
        }
        out.push_str("</defs>\n");
        order.sort_by(|&a, &b| scene.spheres[a].center[2].total_cmp(&scene.spheres[b].center[2]).then(a.cmp(&b)));
    }
    out.push_str("<g class=\"spheres\">\n");
    for &i in &order {
        let s = &scene.spheres[i];
        let (x, y) = scene.to_px(s.center[0], s.center[1]);
        let fill = if scene.n == 3 { format!("url(#shade-{i})") } else { s.color.clone() };
        writeln!(
            out,
            r#"<circle class="sphere" data-label="{}" cx="{}" cy="{}" r="{}" fill="{fill}" fill-opacity="{}" stroke="{}" stroke-width="1.5"/>"#,
            escape(&s.label),
            num(x),
            num(y),
            num(scene.scale * s.radius),
            num(options.fill_opacity),
            s.color
        )
        .unwrap();
    }
    out.push_str("</g>\n<g class=\"labels\">\n");
    for s in &scene.spheres {
        let (x, y) = scene.to_px(s.center[0], s.center[1]);
        text(&mut out, x, y + options.font_size / 3.0, "middle", options.font_size, &s.label);
    }
    out.push_str("</g>\n<g class=\"sign-flips\">\n");
    for f in &scene.sign_flips {
        let (a, b) = (&scene.spheres[f.i], &scene.spheres[f.j]);
        let d = ((b.center[0] - a.center[0]).powi(2) + (b.center[1] - a.center[1]).powi(2)).sqrt();
        let u = if d > 0.0 { [(b.center[0] - a.center[0]) / d, (b.center[1] - a.center[1]) / d] } else { [1.0, 0.0] };
        // midpoint between the two facing boundary points
        let t = (a.radius + d - b.radius) / 2.0;
        let m = [a.center[0] + t * u[0], a.center[1] + t * u[1]];
        let half = (f.visualized - f.target).abs() / 2.0;
        let (x1, y1) = scene.to_px(m[0] - half * u[0], m[1] - half * u[1]);
        let (x2, y2) = scene.to_px(m[0] + half * u[0], m[1] + half * u[1]);
        writeln!(
            out,
            r##"<line class="sign-flip" data-pair="{},{}" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#000000" stroke-width="3"/>"##,
            f.i,
            f.j,
            num(x1),
            num(y1),
            num(x2),
            num(y2)
        )
        .unwrap();
    }
    out.push_str("</g>\n");
    if let Some(len) = scene.error_bar {
        let y = f64::from(options.height) - options.margin / 2.0;
        let x0 = options.margin;
        writeln!(
            out,
            r##"<line class="error-bar" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#d62728" stroke-width="4"/>"##,
            num(x0),
            num(y),
            num(x0 + scene.scale * len),
            num(y)
        )
        .unwrap();
    }
    close_svg(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{optimize, ObjectiveWeights};
    use crate::geometry::SummaryStats;

    fn embed(radii: Vec<f64>, d: Vec<Vec<f64>>, n: usize) -> Embedding {
        let t = radii.len();
        let target = SummaryStats::from_parts(radii, d).unwrap();
        optimize(&target, n, &ObjectiveWeights::default(), 0)
            .with_labels((0..t).map(|i| format!("c{i}")).collect())
            .unwrap()
    }

    fn circles(svg: &str) -> Vec<(f64, f64, f64)> {
        let doc = roxmltree::Document::parse(svg).unwrap();
        doc.descendants()
            .filter(|n| n.has_tag_name("circle"))
            .map(|n| {
                let f = |a| n.attribute(a).unwrap().parse::<f64>().unwrap();
                (f("cx"), f("cy"), f("r"))
            })
            .collect()
    }

    #[test]
    fn single_unit_circle() {
        let e = embed(vec![1.0], vec![vec![0.0]], 2);
        let r = render_scene(&e, None, &RenderOptions::default()).unwrap();
        let c = circles(&r.svg);
        assert_eq!(c.len(), 1);
        assert!((c[0].2 - r.scene.scale).abs() < 1e-3);
        assert_eq!((c[0].0, c[0].1), (400.0, 400.0));
    }

    #[test]
    fn concentric_ratio() {
        let e = embed(vec![2.0, 1.0], vec![vec![0.0, 0.0], vec![0.0, 0.0]], 2);
        let c = circles(&render_scene(&e, None, &RenderOptions::default()).unwrap().svg);
        assert!((c[1].2 / c[0].2 - 0.5).abs() < 0.025);
        assert!((c[0].0 - c[1].0).abs() < 1e-3);
    }

    #[test]
    fn perfect_embedding_is_clean() {
        let d = vec![vec![0.0, 3.0, 4.0], vec![3.0, 0.0, 5.0], vec![4.0, 5.0, 0.0]];
        let e = embed(vec![1.0, 2.0, 1.5], d, 2);
        let r = render_scene(&e, None, &RenderOptions::default()).unwrap();
        assert!(r.scene.sign_flips.is_empty());
        assert!(r.scene.error_bar.is_none());
        assert!(!r.svg.contains("error-bar"));
        assert!(!r.svg.contains("class=\"sign-flip\""));
    }

    #[test]
    fn flips_and_error_bar_for_impossible_targets() {
        // four mutually tangent equal spheres cannot exist in the plane
        let d: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| if i == j { 0.0 } else { 2.0 }).collect()).collect();
        let mut e = embed(vec![1.0; 4], d, 2);
        let r = render_scene(&e, None, &RenderOptions::default()).unwrap();
        assert!(r.scene.error_bar.is_some());
        assert!(r.svg.contains("error-bar"));
        // force a sign flip by shrinking one target margin below zero
        let mut dist = e.target.distances().to_vec();
        dist[0][1] = 1.0;
        dist[1][0] = 1.0;
        e.target = SummaryStats::from_parts(vec![1.0; 4], dist).unwrap();
        let r = render_scene(&e, None, &RenderOptions::default()).unwrap();
        assert!(r.scene.sign_flips.iter().all(|f| f.target.signum() != f.visualized.signum()));
        let doc = roxmltree::Document::parse(&r.svg).unwrap();
        let lines = doc.descendants().filter(|n| n.attribute("class") == Some("sign-flip")).count();
        assert_eq!(lines, r.scene.sign_flips.len());
    }

    #[test]
    fn three_dimensional_is_depth_sorted() {
        let d = vec![
            vec![0.0, 3.0, 3.0, 3.0],
            vec![3.0, 0.0, 3.0, 3.0],
            vec![3.0, 3.0, 0.0, 3.0],
            vec![3.0, 3.0, 3.0, 0.0],
        ];
        let e = embed(vec![1.0; 4], d, 3);
        let r = render_scene(&e, None, &RenderOptions::default()).unwrap();
        let doc = roxmltree::Document::parse(&r.svg).unwrap();
        let labels: Vec<&str> = doc.descendants().filter_map(|n| n.attribute("data-label")).collect();
        let z = |l: &str| r.scene.spheres.iter().find(|s| s.label == l).unwrap().center[2];
        assert!(labels.windows(2).all(|w| z(w[0]) <= z(w[1])));
        assert!(r.svg.contains("radialGradient"));
        assert_eq!(r.scene.spheres[0].center.len(), 3);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let d = vec![vec![0.0, 2.7, 1.1], vec![2.7, 0.0, 3.3], vec![1.1, 3.3, 0.0]];
        let e = embed(vec![0.3, 1.7, 0.9], d, 2);
        let r = render_scene(&e, None, &RenderOptions::default()).unwrap();
        let back = Scene::from_json(&r.scene.to_json()).unwrap();
        assert_eq!(back, r.scene);
        for (s, (c, rad)) in back.spheres.iter().zip(e.centers.iter().zip(&e.radii)) {
            assert_eq!(&s.center, c);
            assert_eq!(s.radius, *rad);
        }
    }

    #[test]
    fn deterministic_bytes() {
        let d = vec![vec![0.0, 2.0], vec![2.0, 0.0]];
        let e = embed(vec![1.0, 1.0], d, 2);
        let a = render_scene(&e, None, &RenderOptions::default()).unwrap().svg;
        let b = render_scene(&e, None, &RenderOptions::default()).unwrap().svg;
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_non_finite() {
        let mut e = embed(vec![1.0], vec![vec![0.0]], 2);
        e.radii[0] = f64::NAN;
        assert!(matches!(render_scene(&e, None, &RenderOptions::default()), Err(Error::NonFinite(_))));
    }
}
