use std::fmt::Write;

use super::{fmt_fixed, ReportError};
use crate::metrics::Matrix;

/// 9-step sequential blue ramp, light to dark.
pub const BLUES: [&str; 9] = [
    "#f7fbff", "#deebf7", "#c6dbef", "#9ecae1", "#6baed6", "#4292c6", "#2171b5", "#08519c", "#08306b",
];
/// 9-step sequential green ramp, light to dark.
pub const GREENS: [&str; 9] = [
    "#f7fcf5", "#e5f5e0", "#c7e9c0", "#a1d99b", "#74c476", "#41ab5d", "#238b45", "#006d2c", "#00441b",
];

const CELL_W: usize = 96;
const CELL_H: usize = 40;
const LEFT: usize = 120;
const TOP: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorScale {
    SequentialBlue,
    SequentialGreen,
}

impl ColorScale {
    pub fn stops(self) -> &'static [&'static str; 9] {
        match self {
            ColorScale::SequentialBlue => &BLUES,
            ColorScale::SequentialGreen => &GREENS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HeatmapSpec {
    pub title: String,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub values: Matrix,
    /// Shown in parentheses after each value when present.
    pub std: Option<Matrix>,
    pub scale: ColorScale,
    pub decimals: usize,
}

/// Step of the ramp for `v` on the domain `[min, max]`. A zero-width domain
/// maps everything to the middle step.
pub fn color_step(v: f64, min: f64, max: f64) -> usize {
    if !(max > min) {
        return 4;
    }
    let x = ((v - min) / (max - min) * 9.0).floor();
    x.clamp(0.0, 8.0) as usize
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Cell annotation: the value, then the std in parentheses if given.
pub fn annotation(v: Option<f64>, std: Option<f64>, decimals: usize) -> String {
    match (v, std) {
        (None, _) => "NA".to_string(),
        (Some(v), None) => fmt_fixed(v, decimals),
        (Some(v), Some(s)) => format!("{} ({})", fmt_fixed(v, decimals), fmt_fixed(s, decimals)),
    }
}

pub fn render_heatmap(spec: &HeatmapSpec) -> Result<String, ReportError> {
    let rows = spec.row_labels.len();
    let cols = spec.col_labels.len();
    if rows == 0 || cols == 0 {
        return Err(ReportError::Shape("heatmap needs at least one row and column".into()));
    }
    let ragged = |m: &Matrix| m.len() != rows || m.iter().any(|r| r.len() != cols);
    if ragged(&spec.values) || spec.std.as_ref().is_some_and(ragged) {
        return Err(ReportError::Shape(format!("matrix does not match {rows}×{cols} labels")));
    }
    let finite: Vec<f64> = spec.values.iter().flatten().flatten().copied().filter(|v| v.is_finite()).collect();
    let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let max = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let stops = spec.scale.stops();

    let width = LEFT + cols * CELL_W + 16;
    let height = TOP + rows * CELL_H + 16;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    s.push_str(concat!(
        "<defs><pattern id=\"hatch\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" patternTransform=\"rotate(45)\">",
        "<rect width=\"6\" height=\"6\" fill=\"#ffffff\"/><line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"#999999\" stroke-width=\"2\"/>",
        "</pattern></defs>\n"
    ));
    let _ = writeln!(
        s,
        r#"<text class="title" x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        width / 2,
        escape(&spec.title)
    );
    for (j, label) in spec.col_labels.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text class="col-label" x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
            LEFT + j * CELL_W + CELL_W / 2,
            TOP - 10,
            escape(label)
        );
    }
    for (i, label) in spec.row_labels.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text class="row-label" x="{}" y="{}" text-anchor="end" font-size="12">{}</text>"#,
            LEFT - 8,
            TOP + i * CELL_H + CELL_H / 2 + 4,
            escape(label)
        );
    }
    for i in 0..rows {
        for j in 0..cols {
            let (x, y) = (LEFT + j * CELL_W, TOP + i * CELL_H);
            let v = spec.values[i][j].filter(|v| v.is_finite());
            let (fill, ink) = match v {
                Some(v) => {
                    let k = color_step(v, min, max);
                    (stops[k].to_string(), if k >= 5 { "#ffffff" } else { "#000000" })
                }
                None => ("url(#hatch)".to_string(), "#000000"),
            };
            let sd = spec.std.as_ref().and_then(|m| m[i][j]);
            let _ = writeln!(
                s,
                r##"<rect class="cell" x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="{fill}" stroke="#ffffff"/>"##
            );
            let _ = writeln!(
                s,
                r#"<text class="cell-text" x="{}" y="{}" text-anchor="middle" font-size="11" fill="{ink}">{}</text>"#,
                x + CELL_W / 2,
                y + CELL_H / 2 + 4,
                annotation(v, sd, spec.decimals)
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}
