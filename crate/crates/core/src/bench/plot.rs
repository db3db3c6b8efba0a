//! Minimal deterministic SVG learning-curve plots.

use std::fmt::Write as _;
use std::path::Path;

use super::LearningCurve;
use crate::criteria::CriterionKind;
use crate::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

fn color(kind: CriterionKind) -> &'static str {
    match kind {
        CriterionKind::Random => "#555555",
        CriterionKind::HotellingT2 => "#d95f02",
        CriterionKind::QbcAmbiguity => "#1f78b4",
        CriterionKind::ExpectedModelChange => "#33a02c",
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn plot_w() -> f64 {
        WIDTH - LEFT - RIGHT
    }

    fn plot_h() -> f64 {
        HEIGHT - TOP - BOTTOM
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * Self::plot_w()
    }

    fn py(&self, y: f64) -> f64 {
        TOP + (1.0 - (y - self.y0) / (self.y1 - self.y0)) * Self::plot_h()
    }
}

fn frame(curves: &[LearningCurve]) -> Frame {
    let xs = curves.iter().flat_map(|c| c.grid.iter().map(|&g| g as f64));
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let ys = curves
        .iter()
        .flat_map(|c| c.mean.iter().zip(&c.std).flat_map(|(m, s)| [m - s, m + s]));
    let (lo, hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.05 * hi.abs().max(1e-3) };
    Frame {
        x0,
        x1,
        y0: lo - pad,
        y1: hi + pad,
    }
}

/// Renders the curves as an SVG document.
pub fn render_svg(curves: &[LearningCurve], title: &str) -> Result<String> {
    if curves.is_empty() || curves.iter().any(|c| c.grid.is_empty()) {
        return Err(Error::InvalidParameter("nothing to plot".into()));
    }
    let f = frame(curves);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, LEFT + Frame::plot_w() / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<g class="plot-area" data-left="{LEFT}" data-top="{TOP}" data-width="{}" data-height="{}" data-xmin="{:e}" data-xmax="{:e}" data-ymin="{:e}" data-ymax="{:e}">"#,
        Frame::plot_w(),
        Frame::plot_h(),
        f.x0,
        f.x1,
        f.y0,
        f.y1
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        Frame::plot_w(),
        Frame::plot_h()
    );

    // ticks
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let xv = f.x0 + t * (f.x1 - f.x0);
        let yv = f.y0 + t * (f.y1 - f.y0);
        let (px, py) = (f.px(xv), f.py(yv));
        let base = TOP + Frame::plot_h();
        let _ = writeln!(s, r#"<line x1="{px:.3}" y1="{base}" x2="{px:.3}" y2="{}" stroke="black"/>"#, base + 5.0);
        let _ = writeln!(s, r#"<text x="{px:.3}" y="{}" text-anchor="middle">{xv:.0}</text>"#, base + 18.0);
        let _ = writeln!(s, r#"<line x1="{}" y1="{py:.3}" x2="{LEFT}" y2="{py:.3}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.3}" text-anchor="end">{}</text>"#, LEFT - 8.0, py + 4.0, tick_label(yv));
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">labels queried</text>"#,
        LEFT + Frame::plot_w() / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">test RMSE</text>"#,
        TOP + Frame::plot_h() / 2.0
    );

    for c in curves {
        let col = color(c.method.criterion);
        let dash = if c.method.use_oae { "" } else { r#" stroke-dasharray="6 4""# };
        let upper: Vec<String> = c
            .grid
            .iter()
            .zip(c.mean.iter().zip(&c.std))
            .map(|(&g, (m, sd))| format!("{:.3},{:.3}", f.px(g as f64), f.py(m + sd)))
            .collect();
        let lower: Vec<String> = c
            .grid
            .iter()
            .zip(c.mean.iter().zip(&c.std))
            .rev()
            .map(|(&g, (m, sd))| format!("{:.3},{:.3}", f.px(g as f64), f.py(m - sd)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polygon class="band" data-method="{}" points="{} {}" fill="{col}" fill-opacity="0.18" stroke="none"/>"#,
            c.method.label(),
            upper.join(" "),
            lower.join(" ")
        );
        let line: Vec<String> = c
            .grid
            .iter()
            .zip(&c.mean)
            .map(|(&g, m)| format!("{:.3},{:.3}", f.px(g as f64), f.py(*m)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="mean" data-method="{}" points="{}" fill="none" stroke="{col}" stroke-width="2"{dash}/>"#,
            c.method.label(),
            line.join(" ")
        );
    }
    let _ = writeln!(s, "</g>");

    let lx = WIDTH - RIGHT + 15.0;
    for (i, c) in curves.iter().enumerate() {
        let y = TOP + 15.0 + 20.0 * i as f64;
        let col = color(c.method.criterion);
        let dash = if c.method.use_oae { "" } else { r#" stroke-dasharray="6 4""# };
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{y}" x2="{}" y2="{y}" stroke="{col}" stroke-width="2"{dash}/>"#,
            lx + 25.0
        );
        let _ = writeln!(s, r#"<text class="legend" x="{}" y="{}">{}</text>"#, lx + 32.0, y + 4.0, c.method.label());
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn tick_label(v: f64) -> String {
    if v.abs() >= 100.0 || (v != 0.0 && v.abs() < 0.01) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes the plot to `path`.
pub fn emit_plot(curves: &[LearningCurve], path: impl AsRef<Path>, title: &str) -> Result<()> {
    let path = path.as_ref();
    let svg = render_svg(curves, title)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}
