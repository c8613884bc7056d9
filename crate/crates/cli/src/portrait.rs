//! Deterministic SVG rendering of augmented phase portraits.
//!
//! Nullclines are dashed, root-curves solid; everything belonging to the
//! X-equation is black and to the Y-equation gray. Coordinates are written
//! with two decimals so identical inputs give identical bytes.

use std::fmt::Write;

use augmap_core::nullclines::{direction_signs, Equation, NullclineCurve, Sign, DIRECTION_BAND};
use augmap_core::trace::Polyline;
use augmap_core::{BBox, PlanarMap, Point};

use crate::analysis::Analysis;

#[derive(Debug, Clone, PartialEq)]
pub struct PortraitStyle {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    pub x_color: &'static str,
    pub y_color: &'static str,
    pub nullcline_dash: &'static str,
    pub stroke_width: f64,
    pub arrow_color: &'static str,
    /// Direction arrows per axis.
    pub arrow_grid: usize,
    pub orbit_color: &'static str,
    /// Regions smaller than this share of the window get no sign glyphs.
    pub min_glyph_area: f64,
}

impl Default for PortraitStyle {
    fn default() -> Self {
        PortraitStyle {
            width: 720.0,
            height: 720.0,
            margin: 56.0,
            x_color: "#000000",
            y_color: "#808080",
            nullcline_dash: "7 5",
            stroke_width: 1.6,
            arrow_color: "#b4b4b4",
            arrow_grid: 16,
            orbit_color: "#1f5fa8",
            min_glyph_area: 0.004,
        }
    }
}

impl PortraitStyle {
    fn color_of(&self, n: Option<&NullclineCurve>) -> &'static str {
        match n.map(|n| n.annihilates) {
            Some(Equation::Y) => self.y_color,
            _ => self.x_color,
        }
    }
}

/// Orbit overlay request: start point and number of steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitSpec {
    pub start: Point,
    pub steps: usize,
}

struct Frame {
    bbox: BBox,
    style: PortraitStyle,
}

impl Frame {
    fn sx(&self, x: f64) -> f64 {
        let s = &self.style;
        s.margin + (x - self.bbox.x0) / self.bbox.width() * (s.width - 2.0 * s.margin)
    }

    fn sy(&self, y: f64) -> f64 {
        let s = &self.style;
        s.height - s.margin - (y - self.bbox.y0) / self.bbox.height() * (s.height - 2.0 * s.margin)
    }

    fn path(&self, pts: &[Point]) -> String {
        let mut d = String::new();
        let mut pen_down = false;
        for p in pts {
            if !p.is_finite() {
                pen_down = false;
                continue;
            }
            let cmd = if pen_down { 'L' } else { 'M' };
            let _ = write!(d, "{cmd}{:.2},{:.2}", self.sx(p.x), self.sy(p.y));
            pen_down = true;
        }
        d
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{:.3}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn star(cx: f64, cy: f64, r: f64) -> String {
    let mut d = String::new();
    for i in 0..10 {
        let rad = if i % 2 == 0 { r } else { 0.45 * r };
        let a = std::f64::consts::PI * (i as f64 / 5.0 - 0.5);
        let _ = write!(d, "{}{:.2},{:.2}", if i == 0 { 'M' } else { 'L' }, cx + rad * a.cos(), cy + rad * a.sin());
    }
    d.push('Z');
    d
}

pub fn render(map: &PlanarMap, analysis: &Analysis, bbox: BBox, orbits: &[OrbitSpec], style: &PortraitStyle) -> String {
    let f = Frame { bbox, style: style.clone() };
    let (w, h, m) = (style.width, style.height, style.margin);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="Helvetica, Arial, sans-serif">"#
    );
    let _ = writeln!(
        s,
        r#"<defs><clipPath id="plot"><rect x="{m}" y="{m}" width="{}" height="{}"/></clipPath><marker id="arrow" viewBox="0 0 6 6" refX="5" refY="3" markerWidth="5" markerHeight="5" orient="auto"><path d="M0,0L6,3L0,6Z" fill="{}"/></marker></defs>"#,
        w - 2.0 * m,
        h - 2.0 * m,
        style.arrow_color
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);

    // Axes and frame.
    let _ = writeln!(s, r#"<g id="axes" stroke="black" stroke-width="1" fill="none">"#);
    let _ = writeln!(s, r#"<rect x="{m}" y="{m}" width="{}" height="{}"/>"#, w - 2.0 * m, h - 2.0 * m);
    if bbox.x0 < 0.0 && bbox.x1 > 0.0 {
        let _ = writeln!(s, r##"<line x1="{0:.2}" y1="{m}" x2="{0:.2}" y2="{1:.2}" stroke="#606060"/>"##, f.sx(0.0), h - m);
    }
    if bbox.y0 < 0.0 && bbox.y1 > 0.0 {
        let _ = writeln!(s, r##"<line x1="{m}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="#606060"/>"##, f.sy(0.0), w - m);
    }
    for t in nice_ticks(bbox.x0, bbox.x1) {
        let x = f.sx(t);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}"/>"#, h - m, h - m + 5.0);
    }
    for t in nice_ticks(bbox.y0, bbox.y1) {
        let y = f.sy(t);
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{m}" y2="{y:.2}"/>"#, m - 5.0);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g id="tick-labels" font-size="12" fill="black">"#);
    for t in nice_ticks(bbox.x0, bbox.x1) {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, f.sx(t), h - m + 18.0, fmt_tick(t));
    }
    for t in nice_ticks(bbox.y0, bbox.y1) {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, m - 8.0, f.sy(t) + 4.0, fmt_tick(t));
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-style="italic" font-size="14">X</text>"#, w / 2.0, h - 14.0);
    let _ = writeln!(s, r#"<text x="16" y="{:.2}" text-anchor="middle" font-style="italic" font-size="14">Y</text>"#, h / 2.0);
    let _ = writeln!(s, "</g>");

    // Direction field on a coarse sub-grid.
    let n = style.arrow_grid.max(2);
    let _ = writeln!(s, r#"<g id="direction" stroke="{}" stroke-width="1" marker-end="url(#arrow)">"#, style.arrow_color);
    let len = 0.32 * (w - 2.0 * m) / n as f64;
    for j in 0..n {
        for i in 0..n {
            let p = Point::new(
                bbox.x0 + (i as f64 + 0.5) * bbox.width() / n as f64,
                bbox.y0 + (j as f64 + 0.5) * bbox.height() / n as f64,
            );
            let d = direction_signs(map, p, DIRECTION_BAND);
            let comp = |s: Sign| match s {
                Sign::Plus => 1.0f64,
                Sign::Minus => -1.0,
                Sign::Zero => 0.0,
            };
            let (dx, dy) = (comp(d.dx), comp(d.dy));
            if dx == 0.0 && dy == 0.0 {
                continue;
            }
            let norm = (dx * dx + dy * dy).sqrt();
            let (cx, cy) = (f.sx(p.x), f.sy(p.y));
            let (ux, uy) = (len * dx / norm, -len * dy / norm);
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
                cx - ux / 2.0,
                cy - uy / 2.0,
                cx + ux / 2.0,
                cy + uy / 2.0
            );
        }
    }
    let _ = writeln!(s, "</g>");

    // Nullclines, dashed.
    let _ = writeln!(
        s,
        r#"<g id="nullclines" clip-path="url(#plot)" fill="none" stroke-width="{}" stroke-dasharray="{}">"#,
        style.stroke_width, style.nullcline_dash
    );
    for nc in &analysis.nullclines {
        let (a, b) = nc.endpoints();
        let _ = writeln!(
            s,
            r#"<path data-label="{}" stroke="{}" d="{}"/>"#,
            esc(&nc.label),
            style.color_of(Some(nc)),
            f.path(&[a, b])
        );
    }
    let _ = writeln!(s, "</g>");

    // Root-curves, solid.
    let _ = writeln!(s, r#"<g id="root-curves" clip-path="url(#plot)" fill="none" stroke-width="{}">"#, style.stroke_width);
    for (label, pieces) in &analysis.curve_pieces {
        let nc = analysis.nullclines.iter().find(|n| &n.label == label);
        for Polyline { points, .. } in pieces {
            if points.len() < 2 {
                continue;
            }
            let _ = writeln!(
                s,
                r#"<path data-label="{}" stroke="{}" d="{}"/>"#,
                esc(label),
                style.color_of(nc),
                f.path(points)
            );
        }
    }
    let _ = writeln!(s, "</g>");

    // Operator sign glyphs per region.
    let _ = writeln!(s, r#"<g id="signs" font-size="15" font-weight="bold" text-anchor="middle">"#);
    if let Some(d) = &analysis.decomposition {
        for r in d.regions.iter().filter(|r| r.area_fraction >= style.min_glyph_area) {
            let p = r.representative;
            let _ = write!(s, r#"<text data-region="{}" x="{:.2}" y="{:.2}">"#, r.id, f.sx(p.x), f.sy(p.y) + 5.0);
            for (label, sign) in &r.op_signs {
                let nc = analysis.nullclines.iter().find(|n| &n.label == label);
                let glyph = match sign {
                    Sign::Minus => "\u{2212}",
                    other => other.glyph(),
                };
                let _ = write!(s, r#"<tspan fill="{}">{glyph}</tspan>"#, style.color_of(nc));
            }
            let _ = writeln!(s, "</text>");
        }
    }
    let _ = writeln!(s, "</g>");

    // Equilibria.
    let _ = writeln!(s, r#"<g id="equilibria" font-size="13">"#);
    if let Some(c) = &analysis.equilibria.continuum {
        let _ = writeln!(
            s,
            r##"<path d="{}" stroke="#c03030" stroke-width="3" fill="none" opacity="0.6"/>"##,
            f.path(&[c.from, c.to])
        );
    }
    for (e, name) in analysis.equilibria.isolated.iter().zip(&analysis.names) {
        if !bbox.contains(e.point) {
            continue;
        }
        let (x, y) = (f.sx(e.point.x), f.sy(e.point.y));
        let _ = writeln!(s, r##"<circle cx="{x:.2}" cy="{y:.2}" r="4.5" fill="#c03030"/>"##);
        let _ = writeln!(s, r##"<text x="{:.2}" y="{:.2}" fill="#c03030">{}</text>"##, x + 7.0, y - 7.0, esc(name));
    }
    let _ = writeln!(s, "</g>");

    // Orbit overlays.
    let _ = writeln!(s, r#"<g id="orbits" stroke="{0}" fill="{0}">"#, style.orbit_color);
    for o in orbits {
        let orbit = map.orbit(o.start, o.steps);
        let _ = writeln!(
            s,
            r#"<path d="{}" fill="none" stroke-width="1" clip-path="url(#plot)"/>"#,
            f.path(&orbit.points)
        );
        for p in orbit.points.iter().skip(1) {
            if bbox.contains(*p) {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2" stroke="none"/>"#, f.sx(p.x), f.sy(p.y));
            }
        }
        let _ = writeln!(s, r#"<path d="{}" stroke="none"/>"#, star(f.sx(o.start.x), f.sy(o.start.y), 7.0));
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}
