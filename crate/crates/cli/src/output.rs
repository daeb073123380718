//! Report persistence: JSONL rows, CSV tables and standalone SVG plots.
//!
//! Every number is printed with Rust's shortest round-trip formatting, so
//! identical reports give identical bytes.

use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use ap_lab_core::numeric::{fit_line, LineFit};
use ap_lab_core::verify::VerificationReport;
use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
struct Row<'a> {
    config_hash: &'a str,
    version: &'a str,
    experiment: &'a str,
    #[serde(flatten)]
    report: &'a VerificationReport,
}

/// One JSON object per line, tagged with the config hash and version.
pub fn jsonl_row(report: &VerificationReport, experiment: &str, hash: &str) -> String {
    serde_json::to_string(&Row { config_hash: hash, version: VERSION, experiment, report }).expect("rows serialize")
}

/// Owns the output directory; all writes go through here.
pub struct Writer {
    dir: PathBuf,
}

impl Writer {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn append_reports(&self, rows: &[String]) -> std::io::Result<PathBuf> {
        let path = self.dir.join("reports.jsonl");
        let mut f = OpenOptions::new().create(true).append(true).open(&path)?;
        for r in rows {
            writeln!(f, "{r}")?;
        }
        Ok(path)
    }

    pub fn write(&self, name: &str, contents: &str) -> std::io::Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        Ok(path)
    }
}

/// File stem carrying the experiment name, the first 16 hex digits of the
/// config hash and the version.
pub fn stem(prefix: &str, name: &str, hash: &str) -> String {
    let safe: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
    format!("{prefix}{safe}-{}-v{VERSION}", &hash[..16])
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

const CSV_HEADER: &str = "config_hash,version,experiment,check,seed,verdict,admissible,kind,key,value";

fn csv_rows(out: &mut String, r: &VerificationReport, experiment: &str, hash: &str) {
    let seed = r.seed.map_or(String::new(), |s| s.to_string());
    let adm = r.admissible_count.map_or(String::new(), |c| c.to_string());
    let head = format!("{hash},{VERSION},{},{},{seed},{},{adm}", csv_field(experiment), r.check_name, r.verdict.as_str());
    for (kind, map) in [("metric", &r.metrics), ("fitted", &r.fitted)] {
        for (k, v) in map {
            let _ = writeln!(out, "{head},{kind},{},{v}", csv_field(k));
        }
    }
    if r.metrics.is_empty() && r.fitted.is_empty() {
        let _ = writeln!(out, "{head},,,");
    }
}

/// Long-format table: one row per metric or fitted value of each report.
pub fn reports_csv(reports: &[VerificationReport], experiment: &str, hash: &str) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in reports {
        csv_rows(&mut out, r, experiment, hash);
    }
    out
}

/// Sweep table: the axis value and per-point config hash lead each row.
pub fn sweep_csv(points: &[(String, String, VerificationReport)], experiment: &str, axis: &str) -> String {
    let mut out = format!("axis,axis_value,{CSV_HEADER}\n");
    for (value, hash, r) in points {
        let mut body = String::new();
        csv_rows(&mut body, r, experiment, hash);
        for line in body.lines() {
            let _ = writeln!(out, "{},{},{line}", csv_field(axis), csv_field(value));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// `log₂ y` against `x`.
    SemiLog,
    /// `log₂ y` against `log₂ x`.
    LogLog,
    Linear,
}

impl Scale {
    fn transform(self, x: f64, y: f64) -> Option<(f64, f64)> {
        let (x, y) = match self {
            Scale::SemiLog => (x, y.abs().log2()),
            Scale::LogLog => (x.log2(), y.abs().log2()),
            Scale::Linear => (x, y),
        };
        (x.is_finite() && y.is_finite()).then_some((x, y))
    }

    fn label(self) -> &'static str {
        match self {
            Scale::SemiLog => "log2|y| vs x",
            Scale::LogLog => "log2|y| vs log2 x",
            Scale::Linear => "y vs x",
        }
    }
}

/// Points in plot coordinates and the least-squares line through them.
pub fn fit_points(xy: &[(f64, f64)], scale: Scale) -> (Vec<(f64, f64)>, Option<LineFit>) {
    let pts: Vec<(f64, f64)> = xy.iter().filter_map(|&(x, y)| scale.transform(x, y)).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().cloned().unzip();
    let fit = fit_line(&xs, &ys);
    (pts, fit)
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 60.0;

fn svg_open(title: &str, hash: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, "<title>{}</title>", esc(title));
    let _ = writeln!(s, "<desc>config_hash {hash}; ap-lab {VERSION}</desc>");
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{PAD}" y="24" font-size="14">{}</text>"#, esc(title));
    let _ = writeln!(s, r##"<text x="{PAD}" y="{}" fill="#666">config {} · v{VERSION}</text>"##, H - 12.0, &hash[..16]);
    s
}

/// Scatter plot with the fitted line, in the coordinates given by `scale`.
pub fn scatter_svg(title: &str, hash: &str, xy: &[(f64, f64)], scale: Scale) -> String {
    let mut s = svg_open(title, hash);
    let (pts, fit) = fit_points(xy, scale);
    if pts.is_empty() {
        let _ = writeln!(s, r#"<text x="{PAD}" y="{}">no plottable points</text>"#, H / 2.0);
        s.push_str("</svg>\n");
        return s;
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let _ = writeln!(
        s,
        r#"<path d="M{:.2} {:.2} L{:.2} {:.2} L{:.2} {:.2}" fill="none" stroke="black"/>"#,
        PAD,
        PAD,
        PAD,
        H - PAD,
        W - PAD,
        H - PAD
    );
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, W / 2.0, H - PAD + 30.0, scale.label());
    for (v, x) in [(x0, px(x0)), (x1, px(x1))] {
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{v:.4}</text>"#, H - PAD + 16.0);
    }
    for (v, y) in [(y0, py(y0)), (y1, py(y1))] {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{y:.2}" text-anchor="end">{v:.4}</text>"#, PAD - 6.0);
    }
    if let Some(f) = fit {
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#c0392b" stroke-dasharray="6 4"/>"##,
            px(x0),
            py(f.intercept + f.slope * x0),
            px(x1),
            py(f.intercept + f.slope * x1)
        );
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="44" fill="#c0392b">slope {:.6}, intercept {:.6}, r² {:.6}</text>"##,
            PAD,
            f.slope,
            f.intercept,
            f.r2
        );
    }
    for &(x, y) in &pts {
        let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#2c6fbb"/>"##, px(x), py(y));
    }
    s.push_str("</svg>\n");
    s
}

/// Text panel listing the metrics of each report.
pub fn table_svg(title: &str, hash: &str, reports: &[VerificationReport]) -> String {
    let mut s = svg_open(title, hash);
    let mut y = 50.0;
    for r in reports {
        let seed = r.seed.map_or("-".to_string(), |v| v.to_string());
        let _ = writeln!(s, r#"<text x="{PAD}" y="{y}" font-weight="bold">seed {seed}: {}</text>"#, r.verdict.as_str());
        y += 16.0;
        for (k, v) in r.metrics.iter().chain(&r.fitted) {
            if y > H - 30.0 {
                break;
            }
            let _ = writeln!(s, r#"<text x="{}" y="{y}">{} = {v}</text>"#, PAD + 12.0, esc(k));
            y += 14.0;
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Longest `prefix_<number>` family among a report's metrics.
pub fn metric_series(r: &VerificationReport) -> Option<(String, Vec<(f64, f64)>)> {
    let mut families: std::collections::BTreeMap<&str, Vec<(f64, f64)>> = Default::default();
    for (k, &v) in &r.metrics {
        if let Some((prefix, suffix)) = k.rsplit_once('_') {
            if let Ok(x) = suffix.parse::<f64>() {
                families.entry(prefix).or_default().push((x, v));
            }
        }
    }
    families
        .into_iter()
        .filter(|(_, pts)| pts.len() >= 2)
        .max_by_key(|(_, pts)| pts.len())
        .map(|(p, mut pts)| {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            (p.to_string(), pts)
        })
}

/// Level-indexed series (integer `x`) read best on a semilog scale.
pub fn default_scale(xy: &[(f64, f64)]) -> Scale {
    if xy.iter().all(|p| p.0.fract() == 0.0) {
        Scale::SemiLog
    } else {
        Scale::LogLog
    }
}

/// Per-run plot: a metric series when the report has one, else a table.
pub fn report_svg(title: &str, hash: &str, reports: &[VerificationReport]) -> String {
    match reports.first().and_then(metric_series) {
        Some((prefix, xy)) => {
            let scale = default_scale(&xy);
            scatter_svg(&format!("{title}: {prefix}"), hash, &xy, scale)
        }
        None => table_svg(title, hash, reports),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn series_and_fit() {
        let mut r = VerificationReport::new("x", "c", json!(1));
        for n in 3..8 {
            r.metric(&format!("a_{n}"), 2f64.powi(-(n as i32)));
        }
        r.metric("bound", 1.0);
        let (p, xy) = metric_series(&r).unwrap();
        assert_eq!(p, "a");
        assert_eq!(default_scale(&xy), Scale::SemiLog);
        let (_, fit) = fit_points(&xy, Scale::SemiLog);
        assert!((fit.unwrap().slope + 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_quotes_fields() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }

    #[test]
    fn svg_is_deterministic() {
        let xy = [(1.0, 2.0), (2.0, 4.0), (4.0, 8.0)];
        let h = "0123456789abcdef0123";
        assert_eq!(scatter_svg("t", h, &xy, Scale::LogLog), scatter_svg("t", h, &xy, Scale::LogLog));
        assert!(scatter_svg("t", h, &xy, Scale::LogLog).contains("slope 1.000000"));
    }
}
