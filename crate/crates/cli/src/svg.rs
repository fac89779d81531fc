//! Minimal SVG emission for costmap heatmaps, path overlays, and signal
//! trace plots.

use std::fmt::Write as _;

use footcast_core::costmap::Costmap;

fn color_ramp(t: f64) -> String {
    // dark blue -> teal -> yellow
    let t = t.clamp(0.0, 1.0);
    let (r, g, b) = if t < 0.5 {
        let u = t * 2.0;
        (20.0 + 20.0 * u, 40.0 + 140.0 * u, 120.0 + 40.0 * u)
    } else {
        let u = (t - 0.5) * 2.0;
        (40.0 + 210.0 * u, 180.0 + 60.0 * u, 160.0 - 120.0 * u)
    };
    format!("rgb({},{},{})", r as u8, g as u8, b as u8)
}

pub struct Heatmap<'a> {
    pub map: &'a Costmap,
    pub max_value: f64,
    pub title: &'a str,
}

const CELL_PX: f64 = 8.0;
const MARGIN_PX: f64 = 30.0;

fn map_px(map: &Costmap, x: f64, y: f64) -> (f64, f64) {
    let gx = (x - map.origin_xy.0) / map.resolution;
    let gy = (y - map.origin_xy.1) / map.resolution;
    (
        MARGIN_PX + gx * CELL_PX,
        MARGIN_PX + (map.height_cells as f64 - 1.0 - gy) * CELL_PX,
    )
}

/// Render a heatmap with zero or more world-frame paths drawn over it.
pub fn heatmap_with_paths(hm: &Heatmap, paths: &[(Vec<(f64, f64)>, &str)]) -> String {
    let map = hm.map;
    let w = MARGIN_PX * 2.0 + map.width_cells as f64 * CELL_PX;
    let h = MARGIN_PX * 2.0 + map.height_cells as f64 * CELL_PX;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(out, r#"<text x="{MARGIN_PX}" y="20" font-family="monospace" font-size="14">{}</text>"#, hm.title).unwrap();
    for iy in 0..map.height_cells {
        for ix in 0..map.width_cells {
            let v = map.at(ix, iy) / hm.max_value;
            let px = MARGIN_PX + ix as f64 * CELL_PX;
            let py = MARGIN_PX + (map.height_cells - 1 - iy) as f64 * CELL_PX;
            writeln!(
                out,
                r#"<rect x="{px}" y="{py}" width="{CELL_PX}" height="{CELL_PX}" fill="{}"/>"#,
                color_ramp(v)
            )
            .unwrap();
        }
    }
    for (path, color) in paths {
        if path.len() < 2 {
            continue;
        }
        let pts: Vec<String> = path
            .iter()
            .map(|&(x, y)| {
                let (px, py) = map_px(map, x, y);
                format!("{px:.1},{py:.1}")
            })
            .collect();
        writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

pub struct TraceSeries<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub values: &'a [f64],
}

/// Plot one or more per-step series on a shared axis, each normalized to
/// its own maximum so differently scaled signals stay readable.
pub fn trace_plot(title: &str, series: &[TraceSeries]) -> String {
    let (w, h) = (640.0, 240.0);
    let (x0, y0, x1, y1) = (50.0, 30.0, w - 20.0, h - 30.0);
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(out, r#"<text x="{x0}" y="20" font-family="monospace" font-size="13">{title}</text>"#).unwrap();
    writeln!(
        out,
        r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y1 - y0
    )
    .unwrap();
    for (si, s) in series.iter().enumerate() {
        if s.values.is_empty() {
            continue;
        }
        let max = s.values.iter().cloned().fold(f64::MIN, f64::max).max(1e-12);
        let n = s.values.len().max(2);
        let pts: Vec<String> = s
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let px = x0 + (x1 - x0) * i as f64 / (n - 1) as f64;
                let py = y1 - (y1 - y0) * (v / max).clamp(0.0, 1.0);
                format!("{px:.1},{py:.1}")
            })
            .collect();
        writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            pts.join(" "),
            s.color
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="monospace" font-size="11" fill="{}">{}</text>"#,
            x1 - 140.0,
            y0 + 14.0 + 14.0 * si as f64,
            s.color,
            s.label
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}
