//! Minimal SVG figures: polygon overlays in the PQ plane and a semi-log
//! timing plot.

use std::fmt::Write;

use pqcap::scanner::semilog_slope;
use pqcap::ConvexPolygon;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

#[derive(Debug, Clone)]
pub struct Layer {
    pub label: String,
    pub polygon: ConvexPolygon,
    pub stroke: &'static str,
    pub fill: &'static str,
    pub dash: Option<&'static str>,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    /// `(x, y)` with `y > 0`.
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let pad = |a: f64, b: f64| {
            let span = if b > a { b - a } else { 1.0 };
            (a - 0.05 * span, b + 0.05 * span)
        };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str, ticks_y: &[(f64, String)]) {
    let (l, r) = (MARGIN, WIDTH - MARGIN);
    let (t, b) = (MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        out,
        r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    for k in 0..=4 {
        let x = f.x0 + (f.x1 - f.x0) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            f.px(x),
            b + 16.0,
            tick(x)
        );
    }
    for (y, text) in ticks_y {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            l - 6.0,
            f.py(*y) + 4.0,
            text
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
}

fn legend(out: &mut String, entries: &[(String, &str, &str, Option<&str>)]) {
    for (k, (label, stroke, fill, dash)) in entries.iter().enumerate() {
        let y = MARGIN + 12.0 + 18.0 * k as f64;
        let x = WIDTH - MARGIN - 150.0;
        let _ = writeln!(
            out,
            r#"<rect x="{x}" y="{:.2}" width="14" height="10" fill="{fill}" stroke="{stroke}"{}/>"#,
            y - 9.0,
            dash_attr(*dash)
        );
        let _ = writeln!(out, r#"<text x="{}" y="{y:.2}">{}</text>"#, x + 20.0, escape(label));
    }
}

/// Overlays polygons in the PQ plane. Empty layers keep their legend entry.
pub fn polygon_overlay(title: &str, layers: &[Layer]) -> String {
    let pts: Vec<_> = layers.iter().flat_map(|l| l.polygon.vertices.iter()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in &pts {
        x0 = x0.min(p.p);
        x1 = x1.max(p.p);
        y0 = y0.min(p.q);
        y1 = y1.max(p.q);
    }
    if pts.is_empty() {
        (x0, x1, y0, y1) = (-1.0, 1.0, -1.0, 1.0);
    }
    let f = Frame::new(x0, x1, y0, y1);
    let mut out = String::new();
    header(&mut out, title);
    let ticks: Vec<_> = (0..=4)
        .map(|k| {
            let y = f.y0 + (f.y1 - f.y0) * k as f64 / 4.0;
            (y, tick(y))
        })
        .collect();
    axes(&mut out, &f, "P (pu)", "Q (pu)", &ticks);
    for layer in layers {
        if layer.polygon.vertices.len() < 2 {
            continue;
        }
        let coords: Vec<String> = layer
            .polygon
            .vertices
            .iter()
            .map(|v| format!("{:.2},{:.2}", f.px(v.p), f.py(v.q)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="{}" stroke="{}" stroke-width="1.5"{}><title>{}</title></polygon>"#,
            coords.join(" "),
            layer.fill,
            layer.stroke,
            dash_attr(layer.dash),
            escape(&layer.label)
        );
    }
    let entries: Vec<_> = layers
        .iter()
        .map(|l| (l.label.clone(), l.stroke, l.fill, l.dash))
        .collect();
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}

/// Semi-log scatter (log10 y axis) with one least-squares line per series.
pub fn semilog_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|(_, y)| *y > 0.0)
        .collect();
    let (mut x0, mut x1) = (f64::MAX, f64::MIN);
    let (mut e0, mut e1) = (f64::MAX, f64::MIN);
    for (x, y) in &pts {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        e0 = e0.min(y.log10());
        e1 = e1.max(y.log10());
    }
    if pts.is_empty() {
        (x0, x1, e0, e1) = (0.0, 1.0, 0.0, 1.0);
    }
    let (e0, e1) = (e0.floor(), e1.ceil().max(e0.floor() + 1.0));
    let f = Frame::new(x0, x1, e0, e1);
    let mut out = String::new();
    header(&mut out, title);
    let ticks: Vec<_> = (e0 as i32..=e1 as i32)
        .map(|e| (e as f64, format!("1e{e}")))
        .collect();
    axes(&mut out, &f, x_label, y_label, &ticks);
    for s in series {
        for (x, y) in s.points.iter().filter(|(_, y)| *y > 0.0) {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{}"/>"#,
                f.px(*x),
                f.py(y.log10()),
                s.color
            );
        }
        if let Some(slope) = semilog_slope(&s.points) {
            let valid: Vec<_> = s.points.iter().filter(|(_, y)| *y > 0.0).collect();
            let k = valid.len() as f64;
            let mx = valid.iter().map(|p| p.0).sum::<f64>() / k;
            let my = valid.iter().map(|p| p.1.ln()).sum::<f64>() / k;
            let line = |x: f64| (my + slope * (x - mx)) / std::f64::consts::LN_10;
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-dasharray="6 3"/>"#,
                f.px(x0),
                f.py(line(x0)),
                f.px(x1),
                f.py(line(x1)),
                s.color
            );
        }
    }
    let entries: Vec<_> = series
        .iter()
        .map(|s| {
            let label = match semilog_slope(&s.points) {
                Some(m) => format!("{} (slope {:.3e})", s.label, m),
                None => s.label.clone(),
            };
            (label, s.color, s.color, None)
        })
        .collect();
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}

fn dash_attr(dash: Option<&str>) -> String {
    dash.map(|d| format!(r#" stroke-dasharray="{d}""#)).unwrap_or_default()
}

fn tick(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
