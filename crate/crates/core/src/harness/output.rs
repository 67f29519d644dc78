//! CSV, JSON and SVG emission, and reading results back for `plot`/`report`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::bounds::{BoundCheck, Verdict};
use super::config::ExperimentConfig;
use super::runner::ExperimentResult;
use super::HarnessError;

pub const SERIES_FILE: &str = "series.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PLOT_FILE: &str = "regret.svg";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// `{}` on `f64` prints the shortest string that parses back to the same value.
fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Per-step CSV: `step`, then `<column>_mean`, `<column>_sd` for each column.
pub fn write_series_csv<W: std::io::Write>(result: &ExperimentResult, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["step".to_string()];
    for c in &result.columns {
        header.push(format!("{}_mean", c.name));
        header.push(format!("{}_sd", c.name));
    }
    w.write_record(&header)?;
    for t in 0..result.config.horizon as usize {
        let mut row = vec![(t + 1).to_string()];
        for c in &result.columns {
            row.push(fmt_f64(c.mean[t]));
            row.push(fmt_f64(c.sd[t]));
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| HarnessError::Runtime(format!("csv flush: {e}")))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalStat {
    pub column: String,
    pub defined: u64,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
}

/// The JSON summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    /// The same config as TOML; exact even for non-finite parameters, which
    /// JSON cannot represent.
    pub config_toml: String,
    pub policy: String,
    pub environment: String,
    pub finals: Vec<FinalStat>,
    pub bounds: Vec<BoundCheck>,
    #[serde(default)]
    pub recommendations: Vec<f64>,
    pub wall_time_secs: f64,
}

impl Summary {
    pub fn from_result(result: &ExperimentResult) -> Self {
        let finite = |x: Option<&f64>| x.copied().filter(|v| v.is_finite());
        Summary {
            config: result.config.clone(),
            config_toml: result.config.to_toml(),
            policy: result.config.policy.name().to_string(),
            environment: result.config.environment.family().to_string(),
            finals: result
                .columns
                .iter()
                .map(|c| FinalStat {
                    column: c.name.clone(),
                    defined: c.defined,
                    mean: finite(c.mean.last()),
                    sd: finite(c.sd.last()),
                })
                .collect(),
            bounds: result.bounds.clone(),
            recommendations: result.recommendations.clone(),
            wall_time_secs: result.wall_time_secs,
        }
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// A per-step table read back from a series CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTable {
    pub steps: Vec<f64>,
    /// `(column, mean, sd)`.
    pub columns: Vec<(String, Vec<f64>, Vec<f64>)>,
}

pub fn read_series_csv(path: &Path) -> Result<SeriesTable, HarnessError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers()?.clone();
    let names: Vec<String> = header
        .iter()
        .skip(1)
        .step_by(2)
        .map(|h| h.trim_end_matches("_mean").to_string())
        .collect();
    let mut table = SeriesTable {
        steps: Vec::new(),
        columns: names.into_iter().map(|n| (n, Vec::new(), Vec::new())).collect(),
    };
    for rec in r.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64, HarnessError> {
            rec.get(i)
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|e| HarnessError::Runtime(format!("{}: bad number in column {i}: {e}", path.display())))
        };
        table.steps.push(parse(0)?);
        for (j, col) in table.columns.iter_mut().enumerate() {
            col.1.push(parse(1 + 2 * j)?);
            col.2.push(parse(2 + 2 * j)?);
        }
    }
    Ok(table)
}

const PALETTE: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Line chart of each column's mean with a ±1 sd band.
pub fn render_svg(table: &SeriesTable, title: &str) -> String {
    let (w, h) = (800.0, 480.0);
    let (left, right, top, bottom) = (70.0, 20.0, 40.0, 50.0);
    let x_max = table.steps.last().copied().unwrap_or(1.0).max(1.0);
    let finite = |v: f64| v.is_finite().then_some(v);
    let (mut y_lo, mut y_hi) = (0.0f64, 0.0f64);
    for (_, m, s) in &table.columns {
        for (mi, si) in m.iter().zip(s) {
            if let (Some(a), Some(b)) = (finite(mi - si), finite(mi + si)) {
                y_lo = y_lo.min(a);
                y_hi = y_hi.max(b);
            }
        }
    }
    if y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    let px = |x: f64| left + (x / x_max) * (w - left - right);
    let py = |y: f64| h - bottom - (y - y_lo) / (y_hi - y_lo) * (h - top - bottom);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="black"/><line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#,
        h - bottom,
        w - right,
        h - bottom,
        h - bottom
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (f * x_max, y_lo + f * (y_hi - y_lo));
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            px(xv),
            h - bottom + 16.0,
            short(xv)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            left - 6.0,
            py(yv) + 4.0,
            short(yv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">step</text>"#,
        (left + w - right) / 2.0,
        h - 12.0
    );
    // Thin out long series; a few thousand vertices is plenty at this size.
    let stride = (table.steps.len() / 2000).max(1);
    let idx: Vec<usize> = (0..table.steps.len())
        .step_by(stride)
        .chain(table.steps.len().checked_sub(1))
        .collect();
    for (k, (name, mean, sd)) in table.columns.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts = |f: &dyn Fn(usize) -> f64, order: &mut dyn Iterator<Item = &usize>| -> String {
            order
                .filter_map(|&i| finite(f(i)).map(|y| format!("{:.2},{:.2}", px(table.steps[i]), py(y))))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let upper = pts(&|i| mean[i] + sd[i], &mut idx.iter());
        let lower = pts(&|i| mean[i] - sd[i], &mut idx.iter().rev());
        let _ = writeln!(
            svg,
            r#"<polygon class="band" points="{upper} {lower}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#
        );
        let line = pts(&|i| mean[i], &mut idx.iter());
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-metric="{}" points="{line}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            escape(name)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{color}">{}</text>"#,
            left + 10.0,
            top + 16.0 * (k as f64 + 1.0),
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn short(v: f64) -> String {
    if v.abs() >= 1000.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Write `series.csv`, `summary.json` and optionally `regret.svg` into `dir`.
pub fn emit_outputs(result: &ExperimentResult, dir: &Path, svg: bool) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv_path = dir.join(SERIES_FILE);
    let file = std::fs::File::create(&csv_path).map_err(io_err(&csv_path))?;
    write_series_csv(result, std::io::BufWriter::new(file))?;
    let json_path = dir.join(SUMMARY_FILE);
    let json = serde_json::to_string_pretty(&Summary::from_result(result))?;
    std::fs::write(&json_path, json + "\n").map_err(io_err(&json_path))?;
    let mut written = vec![csv_path.clone(), json_path];
    if svg {
        let table = read_series_csv(&csv_path)?;
        let svg_path = dir.join(PLOT_FILE);
        let title = format!(
            "{} on {}",
            result.config.policy.name(),
            result.config.environment.family()
        );
        std::fs::write(&svg_path, render_svg(&table, &title)).map_err(io_err(&svg_path))?;
        written.push(svg_path);
    }
    Ok(written)
}

/// Plain-text bound-check table.
pub fn bound_report(summary: &Summary) -> String {
    let mut s = format!(
        "policy {} on {} (H = {}, R = {})\n",
        summary.policy, summary.environment, summary.config.horizon, summary.config.replications
    );
    let _ = writeln!(s, "{:<14} {:<8} {:>14} {:>14}  verdict", "bound", "metric", "bound value", "observed");
    if summary.bounds.is_empty() {
        s.push_str("(no bounds checked)\n");
    }
    for b in &summary.bounds {
        let family = serde_json::to_value(b.bound).ok().and_then(|v| v["family"].as_str().map(String::from));
        let num = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        let verdict = match b.verdict {
            Verdict::Below => "below",
            Verdict::Above => "ABOVE",
            Verdict::NotApplicable => "n/a",
        };
        let metric = serde_json::to_value(b.metric).ok().and_then(|v| v.as_str().map(String::from));
        let _ = writeln!(
            s,
            "{:<14} {:<8} {:>14} {:>14}  {verdict}",
            family.unwrap_or_default(),
            metric.unwrap_or_default(),
            num(b.bound_value),
            num(b.observed)
        );
    }
    for f in &summary.finals {
        let num = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.4}"));
        let _ = writeln!(
            s,
            "final {:<12} mean {:>12}  sd {:>12}  ({} replications)",
            f.column,
            num(f.mean),
            num(f.sd),
            f.defined
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::runner::run_experiment;

    fn result() -> ExperimentResult {
        let cfg = ExperimentConfig::from_toml(
            r#"
horizon = 50
replications = 3
seed = 2
metrics = ["ee", "ep"]
[policy]
name = "ucb1"
[environment]
kind = "stochastic"
arms = [{ dist = "bernoulli", p = 0.7 }, { dist = "bernoulli", p = 0.4 }]
"#,
        )
        .unwrap();
        run_experiment(&cfg, Some(2)).unwrap()
    }

    #[test]
    fn csv_has_header_plus_horizon_rows() {
        let mut buf = Vec::new();
        write_series_csv(&result(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 51);
        assert_eq!(lines[0], "step,ee_mean,ee_sd,ep_mean,ep_sd");
    }

    #[test]
    fn summary_round_trips() {
        let res = result();
        let s = Summary::from_result(&res);
        let back: Summary = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back.config, res.config);
        assert_eq!(ExperimentConfig::from_toml(&back.config_toml).unwrap(), res.config);
    }

    #[test]
    fn svg_has_one_polyline_per_metric() {
        let dir = tempfile::tempdir().unwrap();
        emit_outputs(&result(), dir.path(), true).unwrap();
        let svg = std::fs::read_to_string(dir.path().join(PLOT_FILE)).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(r#"data-metric="ee""#));
        let report = bound_report(&Summary::load(&dir.path().join(SUMMARY_FILE)).unwrap());
        assert!(report.contains("ucb1"));
    }

    #[test]
    fn unwritable_path_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = emit_outputs(&result(), &blocker.join("sub"), false).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }
}
