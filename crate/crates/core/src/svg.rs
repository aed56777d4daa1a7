//! Minimal SVG line charts: one 800×600 panel per view, polylines on linear
//! axes, with an optional zoomed second panel.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const PANEL_WIDTH: f64 = 800.0;
pub const PANEL_HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<[f64; 2]>,
    pub color: String,
    pub dashed: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<[f64; 2]>) -> Self {
        Self { label: label.into(), points, color: "#1f4e9c".into(), dashed: false }
    }

    pub fn with_color(mut self, color: impl Into<String>) -> Self {
        self.color = color.into();
        self
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Bounds {
    /// Bounding box of the finite points, padded by 5% on each side.
    pub fn of<'a>(series: impl IntoIterator<Item = &'a Series>) -> Option<Self> {
        let mut b = Bounds { x_min: f64::INFINITY, x_max: f64::NEG_INFINITY, y_min: f64::INFINITY, y_max: f64::NEG_INFINITY };
        for p in series.into_iter().flat_map(|s| &s.points).filter(|p| p[0].is_finite() && p[1].is_finite()) {
            b.x_min = b.x_min.min(p[0]);
            b.x_max = b.x_max.max(p[0]);
            b.y_min = b.y_min.min(p[1]);
            b.y_max = b.y_max.max(p[1]);
        }
        if !b.x_min.is_finite() {
            return None;
        }
        Some(b.padded(0.05))
    }

    pub fn around(center: [f64; 2], half_width: f64, half_height: f64) -> Self {
        Bounds { x_min: center[0] - half_width, x_max: center[0] + half_width, y_min: center[1] - half_height, y_max: center[1] + half_height }
    }

    fn padded(self, frac: f64) -> Self {
        let pad = |lo: f64, hi: f64| {
            let w = hi - lo;
            let d = if w > 0.0 { frac * w } else { 0.5 * lo.abs().max(1.0) };
            (lo - d, hi + d)
        };
        let (x_min, x_max) = pad(self.x_min, self.x_max);
        let (y_min, y_max) = pad(self.y_min, self.y_max);
        Bounds { x_min, x_max, y_min, y_max }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlotStyle {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Second panel showing this window of the same data.
    pub blowup: Option<Bounds>,
    /// Drawn dashed on top of the data in every panel.
    pub overlay: Option<Series>,
}

/// Tick positions at 1, 2 or 5 times a power of ten, about `target` of them.
pub fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw = (hi - lo) / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn panel(out: &mut String, id: usize, offset_x: f64, bounds: Bounds, series: &[&Series], style: &PlotStyle, title: &str) {
    let (x0, y0) = (offset_x + MARGIN_LEFT, MARGIN_TOP);
    let (w, h) = (PANEL_WIDTH - MARGIN_LEFT - MARGIN_RIGHT, PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM);
    let sx = |x: f64| x0 + (x - bounds.x_min) / (bounds.x_max - bounds.x_min) * w;
    let sy = |y: f64| y0 + h - (y - bounds.y_min) / (bounds.y_max - bounds.y_min) * h;

    let _ = writeln!(out, r#"<clipPath id="plot{id}"><rect x="{x0:.2}" y="{y0:.2}" width="{w:.2}" height="{h:.2}"/></clipPath>"#);
    let _ = writeln!(out, r#"<rect x="{x0:.2}" y="{y0:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="black"/>"#);
    let _ = writeln!(out, r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="16">{}</text>"#, x0 + w / 2.0, escape(title));

    let xt = nice_ticks(bounds.x_min, bounds.x_max, 8);
    let xstep = if xt.len() > 1 { xt[1] - xt[0] } else { 1.0 };
    for &t in &xt {
        let px = sx(t);
        let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, y0 + h, y0 + h + 6.0);
        let _ = writeln!(out, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#, y0 + h + 20.0, tick_label(t, xstep));
    }
    let yt = nice_ticks(bounds.y_min, bounds.y_max, 8);
    let ystep = if yt.len() > 1 { yt[1] - yt[0] } else { 1.0 };
    for &t in &yt {
        let py = sy(t);
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}" stroke="black"/>"#, x0 - 6.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="12">{}</text>"#, x0 - 9.0, py + 4.0, tick_label(t, ystep));
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#, x0 + w / 2.0, PANEL_HEIGHT - 15.0, escape(&style.x_label));
    let (lx, ly) = (offset_x + 20.0, y0 + h / 2.0);
    let _ = writeln!(out, r#"<text x="{lx:.2}" y="{ly:.2}" text-anchor="middle" font-size="14" transform="rotate(-90 {lx:.2} {ly:.2})">{}</text>"#, escape(&style.y_label));

    let _ = writeln!(out, r#"<g clip-path="url(#plot{id})">"#);
    for s in series {
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p[0].is_finite() && p[1].is_finite())
            .map(|p| format!("{:.2},{:.2}", sx(p[0]), sy(p[1])))
            .collect();
        let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"><title>{}</title></polyline>"#, s.color, pts.join(" "), escape(&s.label));
    }
    let _ = writeln!(out, "</g>");
}

/// Standalone SVG document for `series`, plus the overlay and blow-up in `style`.
pub fn render_svg(series: &[Series], style: &PlotStyle) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::InsufficientData("nothing to plot".into()));
    }
    let mut all: Vec<&Series> = series.iter().collect();
    all.extend(style.overlay.as_ref());
    let main = Bounds::of(series.iter()).ok_or_else(|| Error::InsufficientData("no finite points to plot".into()))?;
    let panels = 1 + style.blowup.is_some() as usize;
    let width = PANEL_WIDTH * panels as f64;

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PANEL_HEIGHT}" viewBox="0 0 {width} {PANEL_HEIGHT}">"#);
    let _ = writeln!(out, r#"<rect width="{width}" height="{PANEL_HEIGHT}" fill="white"/>"#);
    panel(&mut out, 0, 0.0, main, &all, style, &style.title);
    if let Some(b) = style.blowup {
        panel(&mut out, 1, PANEL_WIDTH, b, &all, style, "center detail");
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn write_svg(path: &Path, series: &[Series], style: &PlotStyle) -> Result<()> {
    let doc = render_svg(series, style)?;
    std::fs::write(path, doc).map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
}
