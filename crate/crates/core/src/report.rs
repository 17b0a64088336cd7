//! Comparison tables, squared-error density estimates, and plot-ready
//! overlay artifacts (CSV plus dependency-free SVG line charts).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anomaly::AnomalyLabel;
use crate::backtest::{BacktestReport, Ledger, Strategy};
use crate::market_data::PriceSeries;
use crate::predictor::PredictionSeries;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("need at least 2 samples for a density estimate, got {0}")]
    TooFewSamples(usize),
    #[error("samples have zero variance; density estimate is degenerate")]
    ZeroVariance,
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Gaussian kernel density estimate on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

/// Gaussian KDE with Scott's-rule bandwidth `sigma * n^(-1/5)`, evaluated
/// on `grid_points` uniform points spanning [min - 3h, max + 3h].
pub fn gaussian_kde(samples: &[f64], grid_points: usize) -> Result<DensityEstimate, ReportError> {
    if samples.len() < 2 {
        return Err(ReportError::TooFewSamples(samples.len()));
    }
    assert!(grid_points >= 2, "need at least 2 grid points");
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let variance = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    if variance == 0.0 {
        return Err(ReportError::ZeroVariance);
    }
    let bandwidth = variance.sqrt() * n.powf(-0.2);

    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min) - 3.0 * bandwidth;
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 3.0 * bandwidth;
    let step = (hi - lo) / (grid_points - 1) as f64;
    let norm = 1.0 / (n * bandwidth * (2.0 * std::f64::consts::PI).sqrt());

    let mut grid = Vec::with_capacity(grid_points);
    let mut density = Vec::with_capacity(grid_points);
    for i in 0..grid_points {
        let x = lo + step * i as f64;
        let mut acc = 0.0;
        for &s in samples {
            let z = (x - s) / bandwidth;
            acc += (-0.5 * z * z).exp();
        }
        grid.push(x);
        density.push(norm * acc);
    }
    Ok(DensityEstimate {
        grid,
        density,
        bandwidth,
    })
}

impl DensityEstimate {
    /// Trapezoidal integral over the grid; should be within 1% of 1.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, y)| 0.5 * (y[0] + y[1]) * (x[1] - x[0]))
            .sum()
    }
}

/// Equal-width histogram sized so an average bin holds ~`target_per_bin`
/// samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u32>,
}

pub fn histogram(samples: &[f64], target_per_bin: usize) -> Result<Histogram, ReportError> {
    if samples.len() < 2 {
        return Err(ReportError::TooFewSamples(samples.len()));
    }
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Err(ReportError::ZeroVariance);
    }
    let bins = (samples.len() as f64 / target_per_bin.max(1) as f64)
        .round()
        .max(1.0) as usize;
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u32; bins];
    for &s in samples {
        let idx = (((s - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
    Ok(Histogram { edges, counts })
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub ticker: String,
    pub strategy: Strategy,
    pub report: BacktestReport,
}

/// Success-rate formatting: two decimals with a percent sign, N/A otherwise.
pub fn format_success_rate(rate: Option<f64>) -> String {
    match rate {
        Some(r) => format!("{:.2}%", r * 100.0),
        None => "N/A".to_owned(),
    }
}

fn format_count(count: Option<u32>) -> String {
    count.map_or_else(|| "N/A".to_owned(), |c| c.to_string())
}

/// Renders the aligned plain-text comparison table with the published
/// column set. Stored report values are formatted at render time only.
pub fn render_comparison_table(rows: &[ReportRow]) -> String {
    const HEADERS: [&str; 7] = [
        "Stock",
        "Strategy",
        "Profitable",
        "Unprofitable",
        "Total",
        "Success Rate",
        "Profits ($)",
    ];
    let mut cells: Vec<[String; 7]> = Vec::with_capacity(rows.len());
    for row in rows {
        cells.push([
            row.ticker.clone(),
            row.strategy.to_string(),
            format_count(row.report.profitable),
            format_count(row.report.unprofitable),
            format_count(row.report.total),
            format_success_rate(row.report.success_rate),
            row.report.profit.to_string(),
        ]);
    }
    let mut widths = HEADERS.map(str::len);
    for row in &cells {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let write_row = |out: &mut String, cols: &[String; 7]| {
        for (i, (cell, w)) in cols.iter().zip(&widths).enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            let _ = write!(out, "{cell:>w$}", w = *w);
        }
        out.push('\n');
    };
    write_row(&mut out, &HEADERS.map(str::to_owned));
    let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * 6));
    for row in &cells {
        write_row(&mut out, row);
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<(), ReportError> {
    fs::write(path, contents).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Ledger CSV: one row per trade with exact prices.
pub fn write_ledger_csv(ledger: &Ledger, path: &Path) -> Result<(), ReportError> {
    let mut out = String::from("entry_date,entry_price,exit_date,exit_price,pnl,forced_exit\n");
    for t in ledger.trades() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            t.entry_date,
            t.entry_price,
            t.exit_date,
            t.exit_price,
            t.pnl(),
            t.forced_exit
        );
    }
    write_file(path, &out)
}

/// Prediction overlay CSV: date, actual close, predicted close.
pub fn write_prediction_csv(p: &PredictionSeries, path: &Path) -> Result<(), ReportError> {
    let mut out = String::from("date,actual,predicted\n");
    for i in 0..p.len() {
        let _ = writeln!(out, "{},{},{}", p.dates[i], p.actual[i], p.predicted[i]);
    }
    write_file(path, &out)
}

/// Anomaly overlay CSV: date, actual close, reconstruction MAE, label.
pub fn write_anomaly_csv(
    series: &PriceSeries,
    labels: &[AnomalyLabel],
    path: &Path,
) -> Result<(), ReportError> {
    let mut out = String::from("date,adj_close,reconstruction_mae,is_anomaly\n");
    for (bar, label) in series.bars().iter().zip(labels) {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            bar.date, bar.adj_close, label.reconstruction_mae, label.is_anomaly
        );
    }
    write_file(path, &out)
}

/// Density CSV with the published two-column layout.
pub fn write_density_csv(d: &DensityEstimate, path: &Path) -> Result<(), ReportError> {
    let mut out = String::from("grid,density\n");
    for (g, v) in d.grid.iter().zip(&d.density) {
        let _ = writeln!(out, "{g},{v}");
    }
    write_file(path, &out)
}

pub fn write_histogram_csv(h: &Histogram, path: &Path) -> Result<(), ReportError> {
    let mut out = String::from("bin_start,bin_end,count\n");
    for (i, count) in h.counts.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", h.edges[i], h.edges[i + 1], count);
    }
    write_file(path, &out)
}

// ---- SVG line charts -------------------------------------------------

const SVG_W: f64 = 960.0;
const SVG_H: f64 = 480.0;
const MARGIN: f64 = 50.0;

struct ChartScale {
    min_y: f64,
    max_y: f64,
    n: usize,
}

impl ChartScale {
    fn new(series: &[&[f64]]) -> Self {
        let mut min_y = f64::INFINITY;
        let mut max_y = f64::NEG_INFINITY;
        let mut n = 0;
        for s in series {
            n = n.max(s.len());
            for &v in *s {
                min_y = min_y.min(v);
                max_y = max_y.max(v);
            }
        }
        if min_y == max_y {
            min_y -= 1.0;
            max_y += 1.0;
        }
        ChartScale { min_y, max_y, n }
    }

    fn x(&self, i: usize) -> f64 {
        let span = (self.n.saturating_sub(1)).max(1) as f64;
        MARGIN + (SVG_W - 2.0 * MARGIN) * i as f64 / span
    }

    fn y(&self, v: f64) -> f64 {
        let t = (v - self.min_y) / (self.max_y - self.min_y);
        SVG_H - MARGIN - (SVG_H - 2.0 * MARGIN) * t
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn polyline(scale: &ChartScale, values: &[f64], color: &str) -> String {
    let points: Vec<String> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| format!("{:.2},{:.2}", scale.x(i), scale.y(v)))
        .collect();
    format!(
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        points.join(" ")
    )
}

fn svg_chart(title: &str, series: &[(&str, &[f64], &str)], markers: &[(usize, f64)]) -> String {
    let values: Vec<&[f64]> = series.iter().map(|(_, v, _)| *v).collect();
    let scale = ChartScale::new(&values);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {SVG_W} {SVG_H}\" width=\"{SVG_W}\" height=\"{SVG_H}\">"
    );
    let _ = writeln!(
        out,
        "<rect width=\"{SVG_W}\" height=\"{SVG_H}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
        SVG_W / 2.0,
        xml_escape(title)
    );
    // Axes.
    let _ = writeln!(
        out,
        "<line x1=\"{MARGIN}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        SVG_H - MARGIN,
        SVG_W - MARGIN,
        SVG_H - MARGIN
    );
    let _ = writeln!(
        out,
        "<line x1=\"{MARGIN}\" y1=\"{MARGIN}\" x2=\"{MARGIN}\" y2=\"{}\" stroke=\"black\"/>",
        SVG_H - MARGIN
    );
    let _ = writeln!(
        out,
        "<text x=\"8\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{:.2}</text>",
        SVG_H - MARGIN,
        scale.min_y
    );
    let _ = writeln!(
        out,
        "<text x=\"8\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{:.2}</text>",
        MARGIN + 4.0,
        scale.max_y
    );
    for (i, (name, values, color)) in series.iter().enumerate() {
        out.push_str(&polyline(&scale, values, color));
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{color}\">{}</text>",
            SVG_W - MARGIN - 150.0,
            MARGIN + 16.0 * i as f64,
            xml_escape(name)
        );
    }
    for &(i, v) in markers {
        let _ = writeln!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"red\"/>",
            scale.x(i),
            scale.y(v)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Actual-vs-predicted overlay chart.
pub fn write_prediction_svg(
    ticker: &str,
    p: &PredictionSeries,
    path: &Path,
) -> Result<(), ReportError> {
    let actual: Vec<f64> = p.actual.iter().map(|d| d.to_f64()).collect();
    let svg = svg_chart(
        &format!("{ticker} price prediction"),
        &[
            ("actual", &actual, "#1f77b4"),
            ("predicted", &p.predicted, "#ff7f0e"),
        ],
        &[],
    );
    write_file(path, &svg)
}

/// Price chart with breakout days marked.
pub fn write_anomaly_svg(
    ticker: &str,
    series: &PriceSeries,
    labels: &[AnomalyLabel],
    path: &Path,
) -> Result<(), ReportError> {
    let closes = series.closes_f64();
    let markers: Vec<(usize, f64)> = labels
        .iter()
        .enumerate()
        .filter(|(_, l)| l.is_anomaly)
        .map(|(i, _)| (i, closes[i]))
        .collect();
    let svg = svg_chart(
        &format!("{ticker} breakout detections"),
        &[("adjusted close", &closes, "#1f77b4")],
        &markers,
    );
    write_file(path, &svg)
}

/// Plain price history chart.
pub fn write_price_svg(series: &PriceSeries, path: &Path) -> Result<(), ReportError> {
    let closes = series.closes_f64();
    let svg = svg_chart(
        &format!("{} adjusted close", series.ticker()),
        &[("adjusted close", &closes, "#1f77b4")],
        &[],
    );
    write_file(path, &svg)
}
