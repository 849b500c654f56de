//! Aggregation of trial records and plot output (CSV and a static SVG).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Algorithm, TrialRecord};
use crate::error::{Error, Result};

/// Summary of one (algorithm, μ, m) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub algorithm: Algorithm,
    pub mu: f64,
    pub m: usize,
    pub trials: usize,
    pub mean_nmse: f64,
    /// Standard error of the mean; absent for a single trial.
    pub std_err: Option<f64>,
    pub median_nmse: f64,
}

/// Aggregate table plus its renderings.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotData {
    pub rows: Vec<AggregateRow>,
    pub csv: String,
    pub svg: Option<String>,
}

/// Groups records by (algorithm, μ, m), in that sort order.
pub fn aggregate(records: &[TrialRecord]) -> Result<Vec<AggregateRow>> {
    if records.is_empty() {
        return Err(Error::InvalidData("no records to aggregate".into()));
    }
    let mut groups: BTreeMap<(Algorithm, u64, usize), Vec<f64>> = BTreeMap::new();
    for r in records {
        // μ ≥ 0, so the bit pattern orders like the value.
        groups.entry((r.algorithm, r.mu.to_bits(), r.m)).or_default().push(r.nmse);
    }
    Ok(groups
        .into_iter()
        .map(|((algorithm, mu_bits, m), vals)| {
            let (mean, se) = crate::stats::mean_and_se(&vals);
            let mut sorted = vals.clone();
            sorted.sort_by(f64::total_cmp);
            let k = sorted.len();
            let median = if k % 2 == 1 { sorted[k / 2] } else { 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]) };
            AggregateRow {
                algorithm,
                mu: f64::from_bits(mu_bits),
                m,
                trials: k,
                mean_nmse: mean,
                std_err: (k > 1).then_some(se),
                median_nmse: median,
            }
        })
        .collect())
}

pub fn aggregates_to_csv(rows: &[AggregateRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidData(e.to_string()))
}

pub fn write_records<W: Write>(w: W, records: &[TrialRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(r: R) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

/// Aggregates records and renders the CSV table, plus an SVG chart when asked.
pub fn emit_plot_data(records: &[TrialRecord], with_svg: bool) -> Result<PlotData> {
    let rows = aggregate(records)?;
    let csv = aggregates_to_csv(&rows)?;
    let svg = with_svg.then(|| render_svg(&rows, "mean NMSE"));
    Ok(PlotData { rows, csv, svg })
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Line chart of mean NMSE against m, one series per (algorithm, μ), with
/// standard-error bars.
pub fn render_svg(rows: &[AggregateRow], y_label: &str) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (70.0, 170.0, 30.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;

    let mut series: BTreeMap<(Algorithm, u64), Vec<&AggregateRow>> = BTreeMap::new();
    for r in rows {
        series.entry((r.algorithm, r.mu.to_bits())).or_default().push(r);
    }
    let xmin = rows.iter().map(|r| r.m).min().unwrap_or(0) as f64;
    let xmax = rows.iter().map(|r| r.m).max().unwrap_or(1) as f64;
    let ymax = rows
        .iter()
        .map(|r| r.mean_nmse + r.std_err.unwrap_or(0.0))
        .fold(0.0f64, f64::max)
        .max(1e-12)
        * 1.05;
    let xspan = if xmax > xmin { xmax - xmin } else { 1.0 };
    let sx = |x: f64| left + (x - xmin) / xspan * pw;
    let sy = |y: f64| top + ph - y / ymax * ph;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, top + ph, left + pw, top + ph);
    let _ = writeln!(svg, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#, top + ph);
    for k in 0..=5 {
        let y = ymax * k as f64 / 5.0;
        let _ = writeln!(svg, r#"<text x="{}" y="{:.1}" text-anchor="end">{:.3}</text>"#, left - 6.0, sy(y) + 4.0, y);
        let x = xmin + xspan * k as f64 / 5.0;
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{}" text-anchor="middle">{:.0}</text>"#, sx(x), top + ph + 18.0, x);
    }
    let _ = writeln!(svg, r#"<text x="{:.1}" y="{}" text-anchor="middle">m</text>"#, left + pw / 2.0, h - 10.0);
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{y_label}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (i, ((alg, mu_bits), pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mu = f64::from_bits(*mu_bits);
        let path: Vec<String> = pts.iter().map(|r| format!("{:.1},{:.1}", sx(r.m as f64), sy(r.mean_nmse))).collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        for r in pts {
            let (x, y) = (sx(r.m as f64), sy(r.mean_nmse));
            let _ = writeln!(svg, r#"<circle cx="{x:.1}" cy="{y:.1}" r="2.5" fill="{color}"/>"#);
            if let Some(se) = r.std_err {
                let _ = writeln!(
                    svg,
                    r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="{color}"/>"#,
                    sy(r.mean_nmse - se),
                    sy(r.mean_nmse + se)
                );
            }
        }
        let ly = top + 16.0 * i as f64 + 8.0;
        let _ = writeln!(svg, r#"<line x1="{}" y1="{ly:.1}" x2="{}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#, w - right + 12.0, w - right + 32.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{:.1}">{alg} μ={mu}</text>"#, w - right + 38.0, ly + 4.0);
    }
    svg.push_str("</svg>\n");
    svg
}
