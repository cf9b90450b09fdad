//! Static SVG line charts of result tables.

use std::fmt::Write;
use std::path::Path;

use crate::error::RunError;
use crate::table::{format_g6, write_file, ResultTable};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 150.0, 30.0, 55.0); // left, right, top, bottom
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// One plotted line.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// Points in table order, sorted by x.
    pub points: Vec<(f64, f64)>,
}

/// Splits the table into series: one per `y` column, further split by the
/// distinct values of `group` if given.
pub fn collect_series(table: &ResultTable, x: &str, ys: &[&str], group: Option<&str>) -> Result<Vec<Series>, RunError> {
    let xs = table.numeric_column(x)?;
    let groups: Vec<String> = match group {
        Some(g) => {
            let i = table.column_index(g)?;
            table.rows.iter().map(|r| r[i].render()).collect()
        }
        None => vec![String::new(); table.rows.len()],
    };
    let mut out = Vec::new();
    for &y in ys {
        let yv = table.numeric_column(y)?;
        let mut order: Vec<&String> = Vec::new();
        for g in &groups {
            if !order.contains(&g) {
                order.push(g);
            }
        }
        for g in order {
            let mut points: Vec<(f64, f64)> =
                (0..xs.len()).filter(|&i| &groups[i] == g).map(|i| (xs[i], yv[i])).collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            let label = match (group, ys.len()) {
                (None, _) => y.to_string(),
                (Some(gc), 1) => format!("{gc}={g}"),
                (Some(gc), _) => format!("{y} {gc}={g}"),
            };
            out.push(Series { label, points });
        }
    }
    Ok(out)
}

fn bounds(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the series as a standalone SVG document.
pub fn render_svg(series: &[Series], x_label: &str, y_label: &str, title: &str) -> String {
    let (ml, mr, mt, mb) = MARGIN;
    let (pw, ph) = (WIDTH - ml - mr, HEIGHT - mt - mb);
    let (x0, x1) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| mt + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="14">{}</text>"#, ml + pw / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black" class="frame"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(xv),
            mt + ph + 16.0,
            format_g6((xv * 1000.0).round() / 1000.0)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            ml - 6.0,
            sy(yv) + 4.0,
            format_g6((yv * 1000.0).round() / 1000.0)
        );
    }
    let _ = writeln!(
        s,
        r#"<text class="x-label" x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        ml + pw / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text class="y-label" x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        mt + ph / 2.0,
        mt + ph / 2.0,
        escape(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        if pts.len() > 1 {
            let _ = writeln!(s, r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, pts.join(" "));
        }
        for p in &pts {
            let (cx, cy) = p.split_once(',').unwrap();
            let _ = writeln!(s, r#"<circle class="marker" cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
        }
        let ly = mt + 10.0 + 18.0 * i as f64;
        let lx = ml + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<g class="legend-entry"><line x1="{lx}" y1="{ly}" x2="{:.1}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text></g>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Plots `ys` against `x` from `table` into `out`.
pub fn plot_table(table: &ResultTable, x: &str, ys: &[&str], group: Option<&str>, out: &Path) -> Result<(), RunError> {
    let series = collect_series(table, x, ys, group)?;
    let y_label = ys.join(", ");
    write_file(out, render_svg(&series, x, &y_label, &table.name).as_bytes())
}
