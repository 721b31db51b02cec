use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::fit::{fit_log2, Fit};
use crate::error::{Error, Result};

/// One experiment result for a single `alpha = 2^-a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub a: u32,
    pub alpha: f64,
    pub a2_log2: f64,
    pub quantity_log2: f64,
    pub oracle_log2: Option<f64>,
    pub cpu_ms: f64,
    /// Named diagnostics; only finite values are kept.
    #[serde(default)]
    pub extra: BTreeMap<String, f64>,
}

impl Row {
    pub fn new(a: u32) -> Row {
        Row {
            a,
            alpha: alpha_of(a),
            a2_log2: f64::NAN,
            quantity_log2: f64::NAN,
            oracle_log2: None,
            cpu_ms: 0.0,
            extra: BTreeMap::new(),
        }
    }

    pub fn put(&mut self, key: &str, value: f64) {
        if value.is_finite() {
            self.extra.insert(key.to_string(), value);
        }
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.extra.get(key).copied()
    }
}

/// `2^-a`.
pub fn alpha_of(a: u32) -> f64 {
    (-(a as f64)).exp2()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Rows, fits and pass/fail assertions of one experiment run, with the
/// configuration that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    /// What `quantity_log2` measures.
    pub quantity: String,
    pub config: serde_json::Value,
    pub rows: Vec<Row>,
    /// Fit of `quantity_log2` against `log2(1/alpha)`, present with 3 or more rows.
    pub fit: Option<Fit>,
    /// Further fits of named diagnostics against `log2(1/alpha)`.
    #[serde(default)]
    pub fits: BTreeMap<String, Fit>,
    #[serde(default)]
    pub assertions: Vec<Assertion>,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    pub elapsed_ms: f64,
    #[serde(skip)]
    clock: Option<Instant>,
}

fn unix_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

impl ExperimentReport {
    pub fn new(experiment: &str, quantity: &str, config: serde_json::Value) -> ExperimentReport {
        ExperimentReport {
            experiment: experiment.to_string(),
            quantity: quantity.to_string(),
            config,
            rows: Vec::new(),
            fit: None,
            fits: BTreeMap::new(),
            assertions: Vec::new(),
            started_unix_ms: unix_ms(),
            finished_unix_ms: 0,
            elapsed_ms: 0.0,
            clock: Some(Instant::now()),
        }
    }

    /// Sorts rows by `a` and fits `quantity_log2` when there are enough rows.
    pub fn set_rows(&mut self, mut rows: Vec<Row>) -> Result<()> {
        rows.sort_by_key(|r| r.a);
        self.rows = rows;
        self.fit = if self.rows.len() >= 3 { Some(self.fit_column(|r| Some(r.quantity_log2))?) } else { None };
        Ok(())
    }

    /// Fits a column against `log2(1/alpha)`; rows lacking it are skipped.
    pub fn fit_column(&self, col: impl Fn(&Row) -> Option<f64>) -> Result<Fit> {
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            self.rows.iter().filter_map(|r| col(r).map(|y| (-r.alpha.log2(), y))).unzip();
        fit_log2(&xs, &ys)
    }

    /// Fits the named extra column and stores the fit under the same name.
    pub fn fit_extra(&mut self, key: &str) -> Result<Option<Fit>> {
        if self.rows.iter().filter(|r| r.get(key).is_some()).count() < 3 {
            return Ok(None);
        }
        let fit = self.fit_column(|r| r.get(key))?;
        self.fits.insert(key.to_string(), fit);
        Ok(Some(fit))
    }

    pub fn assert(&mut self, name: &str, passed: bool, detail: String) {
        self.assertions.push(Assertion { name: name.to_string(), passed, detail });
    }

    /// Records `lo <= value <= hi`.
    pub fn assert_within(&mut self, name: &str, value: f64, lo: f64, hi: f64) {
        let passed = value >= lo && value <= hi;
        self.assert(name, passed, format!("{value:.6} in [{lo}, {hi}]"));
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn finish(&mut self) {
        self.finished_unix_ms = unix_ms();
        if let Some(c) = self.clock {
            self.elapsed_ms = c.elapsed().as_secs_f64() * 1e3;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Format> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(Error::Parse { input: s.to_string(), reason: format!("unknown format `{other}`") }),
        }
    }
}

/// Parses `csv,json,svg`.
pub fn parse_formats(s: &str) -> Result<Vec<Format>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
}

pub const CSV_HEADER: [&str; 6] = ["a", "alpha", "a2_log2", "quantity_log2", "oracle_log2", "cpu_ms"];

/// One row per `alpha`, header always present.
pub fn write_csv<W: std::io::Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &report.rows {
        w.write_record([
            r.a.to_string(),
            r.alpha.to_string(),
            r.a2_log2.to_string(),
            r.quantity_log2.to_string(),
            r.oracle_log2.map(|v| v.to_string()).unwrap_or_default(),
            format!("{:.3}", r.cpu_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_json(report: &ExperimentReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

pub fn from_json(s: &str) -> Result<ExperimentReport> {
    Ok(serde_json::from_str(s)?)
}

/// Log-log scatter of `quantity_log2` (and the oracle, when present) against
/// `log2(1/alpha)` with the fitted line.
pub fn render_svg(report: &ExperimentReport) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const M: f64 = 56.0;
    let pts: Vec<(f64, f64)> = report
        .rows
        .iter()
        .filter(|r| r.quantity_log2.is_finite())
        .map(|r| (-r.alpha.log2(), r.quantity_log2))
        .collect();
    let oracle: Vec<(f64, f64)> =
        report.rows.iter().filter_map(|r| r.oracle_log2.map(|o| (-r.alpha.log2(), o))).collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let all: Vec<&(f64, f64)> = pts.iter().chain(&oracle).collect();
    if all.is_empty() {
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">no data</text>"#, W / 2.0, H / 2.0);
        svg.push_str("</svg>\n");
        return svg;
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for (x, y) in all.iter().copied() {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    let pad = |lo: &mut f64, hi: &mut f64| {
        let span = (*hi - *lo).max(1.0);
        *lo -= 0.05 * span;
        *hi += 0.05 * span;
    };
    pad(&mut x0, &mut x1);
    pad(&mut y0, &mut y1);
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let _ = writeln!(
        svg,
        r#"<path d="M{M} {} H{} M{M} {} V{M}" stroke="black" fill="none"/>"#,
        H - M,
        W - M,
        H - M
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">log2(1/alpha)</text>"#,
        W / 2.0,
        H - 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">log2 {}</text>"#,
        H / 2.0,
        H / 2.0,
        report.quantity
    );
    for (x, y) in &oracle {
        let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="6" fill="none" stroke="gray"/>"#, sx(*x), sy(*y));
    }
    for (x, y) in &pts {
        let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="black"/>"#, sx(*x), sy(*y));
    }
    if let Some(f) = report.fit {
        let (ya, yb) = (f.slope * x0 + f.intercept, f.slope * x1 + f.intercept);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="steelblue" stroke-width="1.5"/>"#,
            sx(x0),
            sy(ya),
            sx(x1),
            sy(yb)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}">slope {:.4} (rms residual {:.2e})</text>"#,
            M + 8.0,
            M - 12.0,
            f.slope,
            f.residual
        );
    }
    let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="end">{}</text>"#, W - M, report.experiment);
    svg.push_str("</svg>\n");
    svg
}

/// Writes `<experiment>.<ext>` into `dir` for each requested format.
pub fn emit_report(report: &ExperimentReport, formats: &[Format], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for f in formats {
        let path = dir.join(format!(
            "{}.{}",
            report.experiment,
            match f {
                Format::Csv => "csv",
                Format::Json => "json",
                Format::Svg => "svg",
            }
        ));
        match f {
            Format::Csv => write_csv(report, fs::File::create(&path)?)?,
            Format::Json => fs::write(&path, to_json(report)?)?,
            Format::Svg => fs::write(&path, render_svg(report))?,
        }
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentReport {
        let mut rep = ExperimentReport::new("sample", "R", serde_json::json!({"k": 1}));
        let rows = (3..7)
            .map(|a| {
                let mut r = Row::new(a);
                r.a2_log2 = a as f64;
                r.quantity_log2 = 2.0 * a as f64 + 0.1 * (a as f64).sin();
                r.oracle_log2 = Some(2.0 * a as f64);
                r.put("x", 0.5 * a as f64);
                r
            })
            .rev()
            .collect();
        rep.set_rows(rows).unwrap();
        rep.fit_extra("x").unwrap();
        rep.finish();
        rep
    }

    #[test]
    fn rows_are_sorted_and_fitted() {
        let rep = sample();
        assert_eq!(rep.rows.iter().map(|r| r.a).collect::<Vec<_>>(), vec![3, 4, 5, 6]);
        assert!((rep.fit.unwrap().slope - 2.0).abs() < 0.2);
        assert!((rep.fits["x"].slope - 0.5).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let rep = sample();
        let back = from_json(&to_json(&rep).unwrap()).unwrap();
        assert_eq!(back.fit.unwrap().slope.to_bits(), rep.fit.unwrap().slope.to_bits());
        assert_eq!(back.rows, rep.rows);
    }

    #[test]
    fn empty_report_is_header_only() {
        let rep = ExperimentReport::new("empty", "R", serde_json::Value::Null);
        let mut buf = Vec::new();
        write_csv(&rep, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,alpha,a2_log2,quantity_log2,oracle_log2,cpu_ms\n");
        assert!(render_svg(&rep).contains("no data"));
    }

    #[test]
    fn formats_parse() {
        assert_eq!(parse_formats("csv, json,svg").unwrap(), vec![Format::Csv, Format::Json, Format::Svg]);
        assert!(parse_formats("png").is_err());
    }
}
