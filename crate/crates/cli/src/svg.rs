//! Minimal deterministic SVG line and scatter plots.

use std::fmt::Write;

const PANEL_W: f64 = 520.0;
const PANEL_H: f64 = 360.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stroke {
    Solid,
    Dashed,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub points: Vec<(f64, f64)>,
    pub stroke: Stroke,
    pub color: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Dot,
    Ring,
    Cross,
    /// Vertical guide through the whole panel at the marker's `x`.
    VLine,
}

#[derive(Debug, Clone)]
pub struct Marker {
    pub x: f64,
    pub y: f64,
    pub shape: Shape,
    pub color: &'static str,
}

#[derive(Debug, Clone, Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
    pub series: Vec<Series>,
    pub markers: Vec<Marker>,
}

impl Panel {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), ..Default::default() }
    }

    fn ranges(&self) -> ((f64, f64), (f64, f64)) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for s in &self.series {
            for &(x, y) in &s.points {
                if x.is_finite() && y.is_finite() {
                    xs.push(x);
                    ys.push(y);
                }
            }
        }
        for m in &self.markers {
            xs.push(m.x);
            if m.shape != Shape::VLine {
                ys.push(m.y);
            }
        }
        let x = self.x_range.unwrap_or_else(|| padded(&xs));
        let y = self.y_range.unwrap_or_else(|| {
            let inside: Vec<f64> = self
                .series
                .iter()
                .flat_map(|s| s.points.iter())
                .filter(|(px, py)| *px >= x.0 && *px <= x.1 && py.is_finite())
                .map(|p| p.1)
                .chain(self.markers.iter().filter(|m| m.shape != Shape::VLine).map(|m| m.y))
                .collect();
            padded(if inside.is_empty() { &ys } else { &inside })
        });
        (x, y)
    }
}

fn padded(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo <= 1e-300 {
        let d = lo.abs().max(1.0) * 0.5;
        return (lo - d, hi + d);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Roughly `n` round tick positions covering `[lo, hi]`.
pub fn ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let raw = (hi - lo) / n.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|f| f * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e4).contains(&a) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    ox: f64,
    oy: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn w() -> f64 {
        PANEL_W - MARGIN_L - MARGIN_R
    }

    fn h() -> f64 {
        PANEL_H - MARGIN_T - MARGIN_B
    }

    fn px(&self, x: f64) -> f64 {
        self.ox + MARGIN_L + (x - self.x.0) / (self.x.1 - self.x.0) * Self::w()
    }

    fn py(&self, y: f64) -> f64 {
        self.oy + MARGIN_T + (self.y.1 - y) / (self.y.1 - self.y.0) * Self::h()
    }

    fn inside(&self, x: f64, y: f64) -> bool {
        x.is_finite() && y.is_finite() && x >= self.x.0 && x <= self.x.1 && y >= self.y.0 && y <= self.y.1
    }
}

fn draw_panel(out: &mut String, panel: &Panel, ox: f64, oy: f64) {
    let (x, y) = panel.ranges();
    let f = Frame { ox, oy, x, y };
    let (l, t) = (ox + MARGIN_L, oy + MARGIN_T);
    let _ = writeln!(
        out,
        r##"<rect x="{l:.2}" y="{t:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#000"/>"##,
        Frame::w(),
        Frame::h()
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
        l + Frame::w() / 2.0,
        oy + 20.0,
        escape(&panel.title)
    );
    let bottom = t + Frame::h();
    for v in ticks(x.0, x.1, 6) {
        let p = f.px(v);
        let _ = writeln!(out, r##"<line class="tick" x1="{p:.2}" y1="{bottom:.2}" x2="{p:.2}" y2="{:.2}" stroke="#000"/>"##, bottom + 5.0);
        let _ = writeln!(
            out,
            r#"<text x="{p:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"#,
            bottom + 18.0,
            label(v)
        );
    }
    for v in ticks(y.0, y.1, 5) {
        let p = f.py(v);
        let _ = writeln!(out, r##"<line class="tick" x1="{:.2}" y1="{p:.2}" x2="{l:.2}" y2="{p:.2}" stroke="#000"/>"##, l - 5.0);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"#,
            l - 8.0,
            p + 4.0,
            label(v)
        );
    }
    if y.0 < 0.0 && y.1 > 0.0 {
        let p = f.py(0.0);
        let _ = writeln!(
            out,
            r##"<line class="axis" x1="{l:.2}" y1="{p:.2}" x2="{:.2}" y2="{p:.2}" stroke="#999" stroke-width="0.5"/>"##,
            l + Frame::w()
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
        l + Frame::w() / 2.0,
        bottom + 38.0,
        escape(&panel.x_label)
    );
    let (yx, yy) = (ox + 16.0, t + Frame::h() / 2.0);
    let _ = writeln!(
        out,
        r#"<text x="{yx:.2}" y="{yy:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 {yx:.2} {yy:.2})">{}</text>"#,
        escape(&panel.y_label)
    );

    for s in &panel.series {
        let dash = match s.stroke {
            Stroke::Solid => "",
            Stroke::Dashed => r#" stroke-dasharray="6 4""#,
        };
        let mut run: Vec<String> = Vec::new();
        let flush = |run: &mut Vec<String>, out: &mut String| {
            if run.len() >= 2 {
                let _ = writeln!(
                    out,
                    r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
                    run.join(" "),
                    s.color
                );
            }
            run.clear();
        };
        for &(px, py) in &s.points {
            if f.inside(px, py) {
                run.push(format!("{:.2},{:.2}", f.px(px), f.py(py)));
            } else {
                flush(&mut run, out);
            }
        }
        flush(&mut run, out);
    }

    for m in &panel.markers {
        if m.shape == Shape::VLine {
            if m.x >= x.0 && m.x <= x.1 {
                let p = f.px(m.x);
                let _ = writeln!(
                    out,
                    r#"<line class="pole" x1="{p:.2}" y1="{t:.2}" x2="{p:.2}" y2="{bottom:.2}" stroke="{}" stroke-dasharray="2 3"/>"#,
                    m.color
                );
            }
            continue;
        }
        if !f.inside(m.x, m.y) {
            continue;
        }
        let (cx, cy) = (f.px(m.x), f.py(m.y));
        match m.shape {
            Shape::Dot => {
                let _ = writeln!(out, r#"<circle class="zero" cx="{cx:.2}" cy="{cy:.2}" r="4" fill="{}"/>"#, m.color);
            }
            Shape::Ring => {
                let _ = writeln!(
                    out,
                    r#"<circle class="zero" cx="{cx:.2}" cy="{cy:.2}" r="4" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                    m.color
                );
            }
            Shape::Cross => {
                let d = 5.0;
                let _ = writeln!(
                    out,
                    r#"<path class="cross" d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="{}" stroke-width="2"/>"#,
                    cx - d,
                    cy - d,
                    cx + d,
                    cy + d,
                    cx - d,
                    cy + d,
                    cx + d,
                    cy - d,
                    m.color
                );
            }
            Shape::VLine => unreachable!(),
        }
    }
}

/// Lays panels out row-major in `cols` columns.
pub fn render(panels: &[Panel], cols: usize) -> String {
    let cols = cols.max(1).min(panels.len().max(1));
    let rows = panels.len().div_ceil(cols).max(1);
    let (w, h) = (PANEL_W * cols as f64, PANEL_H * rows as f64);
    let mut out = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">
<rect width="100%" height="100%" fill="white"/>
"#
    );
    for (i, p) in panels.iter().enumerate() {
        draw_panel(&mut out, p, PANEL_W * (i % cols) as f64, PANEL_H * (i / cols) as f64);
    }
    out.push_str("</svg>\n");
    out
}

/// Splits a sampled curve into runs of constant style; `None` samples break the curve.
pub fn styled_runs(
    points: &[(f64, Option<f64>)],
    style: impl Fn(usize) -> Stroke,
    color: &'static str,
) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    let mut current: Option<Series> = None;
    for k in 0..points.len().saturating_sub(1) {
        let (Some(a), Some(b)) = (points[k].1, points[k + 1].1) else {
            out.extend(current.take());
            continue;
        };
        let st = style(k);
        match current.as_mut() {
            Some(s) if s.stroke == st => s.points.push((points[k + 1].0, b)),
            _ => {
                out.extend(current.take());
                current = Some(Series { points: vec![(points[k].0, a), (points[k + 1].0, b)], stroke: st, color });
            }
        }
    }
    out.extend(current);
    out
}
