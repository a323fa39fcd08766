//! Minimal SVG line and scatter charts.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::LatentState;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub line: bool,
}

/// One chart panel.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn bounds(panel: &Panel) -> (f64, f64, f64, f64) {
    let pts = panel.series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    let pad = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, b + 0.5) };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    let dy = 0.05 * (y1 - y0);
    (x0, x1, y0 - dy, y1 + dy)
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn draw_panel(out: &mut String, panel: &Panel, ox: f64, oy: f64, w: f64, h: f64) {
    let (l, r, t, b) = (50.0, 10.0, 24.0, 36.0);
    let (pw, ph) = (w - l - r, h - t - b);
    let (x0, x1, y0, y1) = bounds(panel);
    let sx = |x: f64| ox + l + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| oy + t + (1.0 - (y - y0) / (y1 - y0)) * ph;
    let _ = writeln!(
        out,
        r##"<rect x="{:.1}" y="{:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#888"/>"##,
        ox + l,
        oy + t
    );
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#, ox + l + pw / 2.0, oy + 15.0, esc(&panel.title));
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"#, ox + l + pw / 2.0, oy + h - 4.0, esc(&panel.x_label));
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
        ox + 12.0,
        oy + t + ph / 2.0,
        ox + 12.0,
        oy + t + ph / 2.0,
        esc(&panel.y_label)
    );
    for (v, anchor_y) in [(y0, sy(y0)), (y1, sy(y1))] {
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="9" text-anchor="end">{v:.3}</text>"#, ox + l - 3.0, anchor_y + 3.0);
    }
    for (v, anchor_x) in [(x0, sx(x0)), (x1, sx(x1))] {
        let _ = writeln!(out, r#"<text x="{anchor_x:.1}" y="{:.1}" font-size="9" text-anchor="middle">{v:.3}</text>"#, oy + t + ph + 12.0);
    }
    for (i, s) in panel.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s.points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()).map(|&(x, y)| (sx(x), sy(y))).collect();
        if s.line && pts.len() > 1 {
            let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
            let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1" points="{}"/>"#, path.join(" "));
        } else {
            for (x, y) in &pts {
                let _ = writeln!(out, r#"<circle cx="{x:.1}" cy="{y:.1}" r="3" fill="{color}"/>"#);
            }
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="9" fill="{color}">{}</text>"#,
            ox + l + 4.0,
            oy + t + 11.0 + 10.0 * i as f64,
            esc(&s.label)
        );
    }
}

/// Renders panels on a grid with `cols` columns.
pub fn render_grid(panels: &[Panel], cols: usize, cell_w: f64, cell_h: f64) -> String {
    let cols = cols.max(1);
    let rows = panels.len().div_ceil(cols).max(1);
    let (w, h) = (cols as f64 * cell_w, rows as f64 * cell_h);
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#);
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        draw_panel(&mut out, p, (i % cols) as f64 * cell_w, (i / cols) as f64 * cell_h, cell_w, cell_h);
    }
    out.push_str("</svg>\n");
    out
}

pub fn write_svg(path: &Path, panels: &[Panel], cols: usize) -> Result<()> {
    if panels.is_empty() {
        return Err(Error::Data("nothing to plot".into()));
    }
    std::fs::write(path, render_grid(panels, cols, 320.0, 200.0))?;
    Ok(())
}

/// One row per basin, one column per scale, mean hidden value against
/// original time index.
pub fn state_panels(states: &[(String, LatentState)]) -> Vec<Panel> {
    let mut panels = Vec::new();
    for (basin, st) in states {
        for (name, traj) in [("fast", &st.fast), ("medium", &st.medium), ("slow", &st.slow)] {
            let points = traj.indices.iter().zip(traj.step_means()).map(|(&t, m)| (t as f64, m)).collect();
            panels.push(Panel {
                title: format!("{basin} {name}"),
                x_label: "history step".into(),
                y_label: "mean hidden".into(),
                series: vec![Series { label: name.into(), points, line: true }],
            });
        }
    }
    panels
}
