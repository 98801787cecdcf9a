//! Minimal SVG line plots written as plain markup.

use std::fmt::Write as _;

use crate::error::{usage, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct PlotStyle {
    pub width: f64,
    pub height: f64,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
}

impl Default for PlotStyle {
    fn default() -> Self {
        Self {
            width: 720.0,
            height: 480.0,
            title: "Mean arrival time against mass".into(),
            x_label: "mass (amu)".into(),
            y_label: "mean arrival time (s)".into(),
            log_x: true,
        }
    }
}

/// A horizontal reference line.
#[derive(Debug, Clone, PartialEq)]
pub struct Asymptote {
    pub y: f64,
    pub label: String,
}

const MARGIN_LEFT: f64 = 90.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Pads a degenerate or tight range so every point sits inside the frame.
fn padded(lo: f64, hi: f64, min_pad: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = if lo != 0.0 { (0.01 * lo.abs()).max(min_pad) } else { 1.0 };
        (lo - pad, hi + pad)
    }
}

/// Round step of roughly `span / target` in 1, 2, 5 × 10ᵏ.
fn nice_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn linear_ticks(lo: f64, hi: f64) -> (Vec<f64>, f64) {
    let step = nice_step(hi - lo, 5.0);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    ((first..=last).map(|k| k as f64 * step).collect(), step)
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    if decimals > 6 || v.abs() >= 1e6 {
        format!("{v:.3e}")
    } else {
        format!("{v:.decimals$}")
    }
}

/// Renders `points` as an SVG line plot with markers, plus an optional
/// dashed horizontal asymptote.
pub fn emit_plot(points: &[(f64, f64)], asymptote: Option<&Asymptote>, style: &PlotStyle) -> CliResult<String> {
    if points.is_empty() {
        return Err(usage("cannot plot an empty table"));
    }
    if let Some(p) = points.iter().find(|p| !(p.0.is_finite() && p.1.is_finite())) {
        return Err(usage(format!("cannot plot non-finite point ({}, {})", p.0, p.1)));
    }
    if style.log_x && points.iter().any(|p| p.0 <= 0.0) {
        return Err(usage("a logarithmic axis needs positive abscissae"));
    }

    let fx = |x: f64| if style.log_x { x.log10() } else { x };
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        x_lo = x_lo.min(fx(x));
        x_hi = x_hi.max(fx(x));
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    if let Some(a) = asymptote {
        y_lo = y_lo.min(a.y);
        y_hi = y_hi.max(a.y);
    }
    let (x_lo, x_hi) = if style.log_x && x_hi == x_lo {
        (x_lo - 0.5, x_hi + 0.5)
    } else {
        padded(x_lo, x_hi, 1e-300)
    };
    let (y_lo, y_hi) = padded(y_lo, y_hi, 1e-300);

    let (w, h) = (style.width, style.height);
    let pw = w - MARGIN_LEFT - MARGIN_RIGHT;
    let ph = h - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (fx(x) - x_lo) / (x_hi - x_lo) * pw;
    let sx_raw = |v: f64| MARGIN_LEFT + (v - x_lo) / (x_hi - x_lo) * pw;
    let sy = |y: f64| MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        w / 2.0,
        escape(&style.title)
    );

    // Ticks and grid.
    let x_ticks: Vec<(f64, String)> = if style.log_x {
        let (a, b) = (x_lo.ceil() as i64, x_hi.floor() as i64);
        let stride = ((b - a) / 8).max(1);
        (a..=b)
            .filter(|k| (k - a) % stride == 0)
            .map(|k| (k as f64, format!("1e{k}")))
            .collect()
    } else {
        let (ticks, step) = linear_ticks(x_lo, x_hi);
        ticks.into_iter().map(|v| (v, tick_label(v, step))).collect()
    };
    for (v, label) in &x_ticks {
        let x = sx_raw(*v);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd"/>"##,
            MARGIN_TOP,
            MARGIN_TOP + ph
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN_TOP + ph + 18.0,
            escape(label)
        );
    }
    let (y_ticks, y_step) = linear_ticks(y_lo, y_hi);
    for v in y_ticks {
        let y = sy(v);
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            MARGIN_LEFT,
            MARGIN_LEFT + pw
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 6.0,
            y + 4.0,
            tick_label(v, y_step)
        );
    }

    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + pw / 2.0,
        h - 14.0,
        escape(&style.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        MARGIN_TOP + ph / 2.0,
        MARGIN_TOP + ph / 2.0,
        escape(&style.y_label)
    );

    if let Some(a) = asymptote {
        let y = sy(a.y);
        let _ = writeln!(
            s,
            r##"<line class="asymptote" x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#c0392b" stroke-dasharray="6 4"/>"##,
            MARGIN_LEFT,
            MARGIN_LEFT + pw
        );
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" text-anchor="end" fill="#c0392b">{}</text>"##,
            MARGIN_LEFT + pw - 6.0,
            y - 6.0,
            escape(&a.label)
        );
    }

    if points.len() > 1 {
        let path: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline class="data" points="{}" fill="none" stroke="#1f4e9c" stroke-width="1.5"/>"##,
            path.join(" ")
        );
    }
    for &(x, y) in points {
        let _ = writeln!(
            s,
            r##"<circle class="marker" cx="{:.2}" cy="{:.2}" r="3" fill="#1f4e9c"/>"##,
            sx(x),
            sy(y)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
