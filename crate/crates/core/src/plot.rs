//! Minimal SVG 1.1 line charts of spectra, plus a merged CSV of the same
//! data. Output depends only on the input values, so identical inputs give
//! identical bytes.

use std::fmt::Write as _;

use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 48.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub wavelengths: Vec<f64>,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(label: impl Into<String>, wavelengths: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if wavelengths.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: wavelengths.len(),
                actual: values.len(),
            });
        }
        if wavelengths.is_empty() {
            return Err(Error::InvalidArgument("series has no samples".into()));
        }
        Ok(Self {
            label: label.into(),
            wavelengths,
            values,
        })
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Round "nice" tick step for a span.
fn tick_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let magnitude = 10f64.powf(raw.log10().floor());
    let frac = raw / magnitude;
    let nice = if frac < 1.5 {
        1.0
    } else if frac < 3.0 {
        2.0
    } else if frac < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * magnitude
}

fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let step = tick_step(hi - lo, target);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|t| t as f64 * step).collect()
}

pub fn render_svg(series: &[Series], title: &str) -> Result<String> {
    if series.is_empty() {
        return Err(Error::InvalidArgument("nothing to plot".into()));
    }
    let all_w = series.iter().flat_map(|s| s.wavelengths.iter().copied());
    let (w_min, w_max) = all_w.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), w| {
        (a.min(w), b.max(w))
    });
    let all_v = series.iter().flat_map(|s| s.values.iter().copied());
    let (v_min, v_max) = all_v.fold((0.0f64, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    let v_max = if v_max <= v_min { v_min + 1.0 } else { v_max };
    let w_span = if w_max > w_min { w_max - w_min } else { 1.0 };
    let v_span = v_max - v_min;

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x_of = |w: f64| LEFT + (w - w_min) / w_span * plot_w;
    let y_of = |v: f64| TOP + (1.0 - (v - v_min) / v_span) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );

    // axes
    let _ = writeln!(
        svg,
        r#"<g stroke="black" stroke-width="1"><line x1="{LEFT}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.2}"/></g>"#,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h,
        TOP + plot_h
    );
    for w in ticks(w_min, w_min + w_span, 6) {
        let x = x_of(w);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{w}</text>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 18.0
        );
    }
    for v in ticks(v_min, v_max, 5) {
        let y = y_of(v);
        let label = format!("{:.2}", v);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"##,
            LEFT - 5.0,
            LEFT + plot_w,
            LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Wavelength (nm)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );

    for (idx, s) in series.iter().enumerate() {
        let colour = PALETTE[idx % PALETTE.len()];
        let points: Vec<String> = s
            .wavelengths
            .iter()
            .zip(&s.values)
            .map(|(&w, &v)| format!("{:.2},{:.2}", x_of(w), y_of(v)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
    }

    if series.len() > 1 {
        let _ = writeln!(svg, r#"<g class="legend">"#);
        for (idx, s) in series.iter().enumerate() {
            let colour = PALETTE[idx % PALETTE.len()];
            let y = TOP + 12.0 + 16.0 * idx as f64;
            let x = LEFT + plot_w - 150.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{colour}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                x + 20.0,
                x + 26.0,
                y + 4.0,
                escape(&s.label)
            );
        }
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// `wavelength_nm,<label>...` over the union of wavelengths; blank where a
/// series has no sample.
pub fn merged_csv(series: &[Series]) -> Result<String> {
    if series.is_empty() {
        return Err(Error::InvalidArgument("nothing to merge".into()));
    }
    let mut wavelengths: Vec<f64> = series
        .iter()
        .flat_map(|s| s.wavelengths.iter().copied())
        .collect();
    wavelengths.sort_by(f64::total_cmp);
    wavelengths.dedup();

    let mut out = String::from("wavelength_nm");
    for s in series {
        out.push(',');
        out.push_str(&s.label.replace([',', '\n'], " "));
    }
    out.push('\n');
    for w in wavelengths {
        let _ = write!(out, "{w}");
        for s in series {
            out.push(',');
            if let Some(p) = s.wavelengths.iter().position(|&x| x == w) {
                let _ = write!(out, "{}", s.values[p]);
            }
        }
        out.push('\n');
    }
    Ok(out)
}
