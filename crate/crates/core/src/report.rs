//! Byte-deterministic CSV, JSON and SVG reports.

use crate::error::{LabError, Result};
use crate::experiments::{FitResult, RateExperiment, RateRow};
use serde::Serialize;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

pub const SCHEMA: &str = "esseen-lab/v1";
pub const CSV_HEADER: &str = "n,distance,sqrt_n_distance,be_rhs,ratio";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    Csv,
    #[default]
    Json,
    Svg,
}

impl FromStr for ReportFormat {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "svg" | "svg_plot" => Ok(Self::Svg),
            other => Err(LabError::BadParam(format!("unknown format {other:?}"))),
        }
    }
}

/// `{"schema": ..., "config": ..., "result": ...}`, pretty-printed with a
/// trailing newline. Object keys come out sorted.
pub fn json_envelope<T: Serialize>(result: &T, config: &Value) -> Result<String> {
    let result = serde_json::to_value(result).map_err(|e| LabError::Io(e.to_string()))?;
    let doc = json!({ "schema": SCHEMA, "config": config, "result": result });
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| LabError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// `{:e}` keeps full round-trip precision and is independent of locale.
fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn rows_csv(rows: &[RateRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.n,
            num(r.distance),
            num(r.sqrt_n_distance),
            num(r.be_rhs),
            num(r.ratio)
        );
    }
    s
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

/// Log–log plot of distance against n, with the fitted line if present.
pub fn rows_svg(title: &str, rows: &[RateRow], fit: Option<&FitResult>) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.distance > 0.0)
        .map(|r| ((r.n as f64).log10(), r.distance.log10()))
        .collect();
    let (x0, x1, y0, y1) = if pts.is_empty() {
        (0.0, 1.0, -1.0, 0.0)
    } else {
        let fold = |f: fn(f64, f64) -> f64, init: f64, sel: fn(&(f64, f64)) -> f64| pts.iter().map(sel).fold(init, f);
        let (x0, x1) = (fold(f64::min, f64::INFINITY, |p| p.0).floor(), fold(f64::max, f64::NEG_INFINITY, |p| p.0).ceil());
        let (y0, y1) = (fold(f64::min, f64::INFINITY, |p| p.1).floor(), fold(f64::max, f64::NEG_INFINITY, |p| p.1).ceil());
        (x0, if x1 > x0 { x1 } else { x0 + 1.0 }, y0, if y1 > y0 { y1 } else { y0 + 1.0 })
    };
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{:.2} {:.2} V{:.2} H{:.2}" fill="none" stroke="black"/>"#,
        px(x0),
        py(y1),
        py(y0),
        px(x1)
    );
    for d in (x0 as i32)..=(x1 as i32) {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">1e{d}</text>"#,
            px(d as f64),
            HEIGHT - MARGIN + 16.0
        );
    }
    for d in (y0 as i32)..=(y1 as i32) {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">1e{d}</text>"#,
            MARGIN - 6.0,
            py(d as f64) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">n</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">Kolmogorov distance</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    if let Some(f) = fit {
        // the fit is in natural logs; convert the endpoints to log10
        let ln10 = std::f64::consts::LN_10;
        let y_at = |x: f64| (f.intercept + f.slope * x * ln10) / ln10;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="steelblue" stroke-dasharray="6 4"/>"#,
            px(x0),
            py(y_at(x0)),
            px(x1),
            py(y_at(x1))
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="44" font-family="sans-serif" font-size="12" text-anchor="end">slope {:.4}, r² {:.4}</text>"#,
            WIDTH - MARGIN,
            f.slope,
            f.r_squared
        );
    }
    for (x, y) in &pts {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="firebrick"/>"#, px(*x), py(*y));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_rate(exp: &RateExperiment, format: ReportFormat, config: &Value) -> Result<String> {
    match format {
        ReportFormat::Csv => Ok(rows_csv(&exp.rows)),
        ReportFormat::Json => json_envelope(exp, config),
        ReportFormat::Svg => Ok(rows_svg(&exp.family, &exp.rows, exp.fit.as_ref())),
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))
}

/// Render `exp` and write it to `path`.
pub fn emit_report(exp: &RateExperiment, format: ReportFormat, config: &Value, path: &Path) -> Result<()> {
    write_text(path, &render_rate(exp, format, config)?)
}
