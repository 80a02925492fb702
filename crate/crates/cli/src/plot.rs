//! Plot data: one lower/empirical/upper triple of matrices per panel,
//! written as CSV and optionally rendered as an SVG heatmap strip.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::{CliError, CliResult};

/// A figure panel: three equally shaped matrices.
pub struct Panel<'a> {
    pub name: &'a str,
    pub title: &'a str,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub lower: DMatrix<f64>,
    pub empirical: DMatrix<f64>,
    pub upper: DMatrix<f64>,
}

impl Panel<'_> {
    fn layers(&self) -> [(&'static str, &DMatrix<f64>); 3] {
        [
            ("lower", &self.lower),
            ("empirical", &self.empirical),
            ("upper", &self.upper),
        ]
    }
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

pub fn matrix_csv(m: &DMatrix<f64>, row_labels: &[String], col_labels: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, ",{}", col_labels.join(","));
    for (i, label) in row_labels.iter().enumerate() {
        let cells: Vec<String> = m.row(i).iter().map(|&v| fmt_value(v)).collect();
        let _ = writeln!(out, "{label},{}", cells.join(","));
    }
    out
}

/// Writes `<dir>/<name>_{lower,empirical,upper}.csv` and, when asked,
/// `<dir>/<name>.svg`. Returns the written paths.
pub fn write_panel(dir: &Path, panel: &Panel, svg: bool) -> CliResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (layer, m) in panel.layers() {
        let path = dir.join(format!("{}_{layer}.csv", panel.name));
        write_file(&path, &matrix_csv(m, &panel.row_labels, &panel.col_labels))?;
        written.push(path);
    }
    if svg {
        let path = dir.join(format!("{}.svg", panel.name));
        write_file(&path, &render_svg(panel))?;
        written.push(path);
    }
    Ok(written)
}

const CELL: f64 = 28.0;
const GAP: f64 = 40.0;
const MARGIN: f64 = 70.0;

/// Diverging blue-white-red scale on `[-1, 1]`.
fn color(t: f64) -> String {
    let t = t.clamp(-1.0, 1.0);
    let (r, g, b) = if t >= 0.0 {
        (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
    } else {
        (255.0 * (1.0 + t), 255.0 * (1.0 + t), 255.0)
    };
    format!(
        "rgb({},{},{})",
        r.round() as u8,
        g.round() as u8,
        b.round() as u8
    )
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Three heatmaps side by side on a shared symmetric colour scale.
/// Infinite cells are drawn grey with a cross.
pub fn render_svg(panel: &Panel) -> String {
    let (rows, cols) = panel.empirical.shape();
    let scale = panel
        .layers()
        .iter()
        .flat_map(|(_, m)| m.iter())
        .filter(|v| v.is_finite())
        .fold(0.0f64, |a, v| a.max(v.abs()));
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let block_w = cols as f64 * CELL;
    let width = MARGIN + 3.0 * block_w + 2.0 * GAP + 20.0;
    let height = MARGIN + rows as f64 * CELL + 40.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="18" font-size="14">{}</text>"#,
        MARGIN,
        escape_xml(panel.title)
    );
    for (b, (layer, m)) in panel.layers().iter().enumerate() {
        let x0 = MARGIN + b as f64 * (block_w + GAP);
        let y0 = MARGIN;
        let _ = writeln!(
            s,
            r#"<text x="{x0}" y="{}" font-size="12">{layer}</text>"#,
            y0 - 22.0
        );
        for (j, label) in panel.col_labels.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
                x0 + (j as f64 + 0.5) * CELL,
                y0 - 6.0,
                escape_xml(label)
            );
        }
        for i in 0..rows {
            let y = y0 + i as f64 * CELL;
            if b == 0 {
                let _ = writeln!(
                    s,
                    r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                    x0 - 6.0,
                    y + CELL * 0.65,
                    escape_xml(&panel.row_labels[i])
                );
            }
            for j in 0..cols {
                let x = x0 + j as f64 * CELL;
                let v = m[(i, j)];
                if v.is_finite() {
                    let _ = writeln!(
                        s,
                        r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}" stroke="white"><title>{v:.6}</title></rect>"#,
                        color(v / scale)
                    );
                } else {
                    let _ = writeln!(
                        s,
                        r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="#bbbbbb" stroke="white"><title>{v}</title></rect><path d="M{x} {y}l{CELL} {CELL}M{} {y}l-{CELL} {CELL}" stroke="#777777"/>"##,
                        x + CELL
                    );
                }
            }
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{}">colour scale: -{scale:.4} (blue) to +{scale:.4} (red)</text>"#,
        height - 12.0
    );
    s.push_str("</svg>\n");
    s
}
