//! CSV, Markdown and JSON rendering of fairness reports.
//!
//! Undefined values are written as `NA` (CSV, Markdown) or `null` (JSON).
//! Miss-rates and EODs are percentages in CSV and Markdown; Cohen's h is in
//! radians everywhere. Output is byte-stable for identical reports.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::BodyRegion;
use crate::model::JointName;
use crate::sweep::{FairnessReport, PairResult, ThresholdResult, ATTRIBUTE_PAIRS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Markdown => "md",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "md" | "markdown" => Ok(Format::Markdown),
            "json" => Ok(Format::Json),
            other => Err(Error::validation("format", format!("unknown format {other:?}"))),
        }
    }
}

/// Renders one or more detector reports. With several reports, cross-detector
/// average rows are appended for every threshold.
pub fn emit(reports: &[FairnessReport], format: Format) -> Vec<u8> {
    match format {
        Format::Csv => emit_csv(reports),
        Format::Markdown => emit_markdown(reports).into_bytes(),
        Format::Json => emit_json(reports),
    }
}

/// One row of numbers, `None` for gaps. Used for both τ rows and averages.
struct Row {
    detector: String,
    cst: String,
    values: Vec<Option<f64>>,
}

fn pct(v: Option<f64>) -> Option<f64> {
    v.map(|x| 100.0 * x)
}

fn csv_values(t: &ThresholdResult) -> Vec<Option<f64>> {
    let mut v = vec![pct(t.overall_mr)];
    for p in t.attributes.iter().chain(&t.joints) {
        v.push(pct(p.eod()));
        v.push(p.cell.map(|c| c.h));
    }
    v
}

fn mean_row(detector: &str, cst: &str, rows: &[Vec<Option<f64>>]) -> Option<Row> {
    let first = rows.first()?;
    let values = (0..first.len())
        .map(|i| {
            let col: Option<Vec<f64>> = rows.iter().map(|r| r[i]).collect();
            col.map(|c| c.iter().sum::<f64>() / c.len() as f64)
        })
        .collect();
    Some(Row {
        detector: detector.to_string(),
        cst: cst.to_string(),
        values,
    })
}

fn fmt_tau(tau: f64) -> String {
    format!("{tau:.2}")
}

/// Per-detector τ rows, each detector's Average row, and, when merging,
/// cross-detector Average rows per τ.
fn table_rows(reports: &[FairnessReport], values: impl Fn(&ThresholdResult) -> Vec<Option<f64>>) -> Vec<Row> {
    let mut rows = Vec::new();
    for r in reports {
        let per_tau: Vec<_> = r.thresholds.iter().map(&values).collect();
        for (t, v) in r.thresholds.iter().zip(&per_tau) {
            rows.push(Row {
                detector: r.detector_name.clone(),
                cst: fmt_tau(t.tau),
                values: v.clone(),
            });
        }
        rows.extend(mean_row(&r.detector_name, "Average", &per_tau));
    }
    if reports.len() > 1 {
        let mut taus: Vec<f64> = reports.iter().flat_map(|r| r.thresholds.iter().map(|t| t.tau)).collect();
        taus.sort_by(f64::total_cmp);
        taus.dedup();
        for tau in taus {
            let at_tau: Vec<_> = reports.iter().filter_map(|r| r.at(tau)).map(&values).collect();
            rows.extend(mean_row("Average", &fmt_tau(tau), &at_tau));
        }
    }
    rows
}

fn csv_header() -> Vec<String> {
    let mut h = vec!["detector".to_string(), "tau".to_string(), "mr_pct".to_string()];
    for label in ATTRIBUTE_PAIRS.iter().copied().chain(JointName::ALL.iter().map(|j| j.as_str())) {
        h.push(format!("eod_pct_{label}"));
        h.push(format!("h_{label}"));
    }
    h
}

fn num(v: Option<f64>, decimals: usize) -> String {
    match v {
        Some(x) => format!("{x:.decimals$}"),
        None => "NA".into(),
    }
}

fn write_csv(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("write to Vec");
    for row in rows {
        w.write_record(&row).expect("write to Vec");
    }
    w.into_inner().expect("flush to Vec")
}

/// Main CSV: one row per (detector, τ) with MR, then EOD and h for every
/// attribute pair and joint.
pub fn emit_csv(reports: &[FairnessReport]) -> Vec<u8> {
    let rows = table_rows(reports, csv_values).into_iter().map(|r| {
        let mut out = vec![r.detector, r.cst];
        out.extend(r.values.into_iter().map(|v| num(v, 6)));
        out
    });
    write_csv(&csv_header(), rows)
}

/// Companion CSV with supports, z and p for every cell.
pub fn emit_significance_csv(reports: &[FairnessReport]) -> Vec<u8> {
    let header: Vec<String> = [
        "detector", "tau", "pair", "minority", "majority", "n_min", "n_maj", "z", "p_value", "significant",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut rows = Vec::new();
    for r in reports {
        for t in &r.thresholds {
            for p in t.attributes.iter().chain(&t.joints) {
                rows.push(vec![
                    r.detector_name.clone(),
                    fmt_tau(t.tau),
                    p.label.clone(),
                    p.minority.clone(),
                    p.majority.clone(),
                    p.n_min.to_string(),
                    p.n_maj.to_string(),
                    num(p.cell.map(|c| c.z), 6),
                    p.cell.map_or("NA".into(), |c| format!("{:.6e}", c.p_value)),
                    p.cell.map_or("NA".into(), |c| c.significant.to_string()),
                ]);
            }
        }
    }
    write_csv(&header, rows)
}

fn signed(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:+.2}"),
        None => "NA".into(),
    }
}

fn md_table(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let line = |cells: &[String]| format!("| {} |\n", cells.join(" | "));
    out.push_str(&line(header));
    out.push_str(&line(&vec!["---".to_string(); header.len()]));
    for r in rows {
        out.push_str(&line(r));
    }
    out.push('\n');
}

fn attribute_values(t: &ThresholdResult) -> Vec<Option<f64>> {
    let mut v = vec![pct(t.overall_mr)];
    for p in &t.attributes {
        v.push(pct(p.eod()));
        v.push(p.cell.map(|c| c.abs_h));
    }
    v
}

fn joint_values(t: &ThresholdResult) -> Vec<Option<f64>> {
    let mut v = vec![pct(t.overall_mr)];
    for p in &t.joints {
        v.push(pct(p.eod()).map(f64::abs));
        v.push(p.cell.map(|c| c.abs_h));
    }
    for region in BodyRegion::ALL {
        v.push(pct(t.regions.get(region)));
    }
    v
}

fn md_rows(rows: Vec<Row>, signed_cols: impl Fn(usize) -> bool) -> Vec<Vec<String>> {
    rows.into_iter()
        .map(|r| {
            let mut out = vec![r.detector, r.cst];
            for (i, v) in r.values.into_iter().enumerate() {
                out.push(if signed_cols(i) { signed(v) } else { num(v, 2) });
            }
            out
        })
        .collect()
}

fn pair_name(p: &PairResult) -> String {
    format!("{} ({} vs {})", p.label, p.minority, p.majority)
}

/// Markdown report shaped like the usual detector-by-threshold fairness tables.
pub fn emit_markdown(reports: &[FairnessReport]) -> String {
    let mut out = String::new();
    let names: Vec<&str> = reports.iter().map(|r| r.detector_name.as_str()).collect();
    let _ = writeln!(out, "# Pedestrian detection fairness report\n");
    let _ = writeln!(out, "Detectors: {}\n", if names.is_empty() { "none".to_string() } else { names.join(", ") });

    out.push_str("## Pose attributes\n\n");
    out.push_str("EOD in percentage points (minority minus majority miss-rate); |h| in radians.\n\n");
    if let Some(t) = reports.iter().flat_map(|r| r.thresholds.first()).next() {
        let roles: Vec<String> = t.attributes.iter().map(pair_name).collect();
        let _ = writeln!(out, "Pairs: {}.\n", roles.join("; "));
    }
    let mut header: Vec<String> = ["Algorithm", "CST", "MR (%)"].iter().map(|s| s.to_string()).collect();
    for label in ATTRIBUTE_PAIRS {
        header.push(format!("EOD {label}"));
        header.push(format!("h {label}"));
    }
    md_table(
        &mut out,
        &header,
        &md_rows(table_rows(reports, attribute_values), |i| i > 0 && i % 2 == 1),
    );

    out.push_str("## Joint occlusion\n\n");
    out.push_str("Absolute EOD (occluded minus visible) in percentage points; |h| in radians; region columns average the absolute joint EODs.\n\n");
    let mut header: Vec<String> = ["Algorithm", "CST", "MR (%)"].iter().map(|s| s.to_string()).collect();
    for j in JointName::ALL {
        header.push(format!("EOD {j}"));
        header.push(format!("h {j}"));
    }
    for region in BodyRegion::ALL {
        header.push(format!("mean {region}"));
    }
    md_table(&mut out, &header, &md_rows(table_rows(reports, joint_values), |_| false));

    out.push_str("## Instance size\n\n");
    out.push_str("Delta = EOD(full) - EOD(large only), percentage points.\n\n");
    let header: Vec<String> = ["Algorithm", "CST", "Pair", "EOD full", "EOD large", "Delta", "Sign stable"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = reports
        .iter()
        .flat_map(|r| {
            r.size_delta.entries.iter().map(move |e| {
                vec![
                    r.detector_name.clone(),
                    fmt_tau(e.tau),
                    e.label.clone(),
                    signed(pct(e.eod_full)),
                    signed(pct(e.eod_large)),
                    signed(pct(e.delta)),
                    e.sign_stable.map_or("NA".into(), |s| if s { "yes".into() } else { "no".into() }),
                ]
            })
        })
        .collect();
    md_table(&mut out, &header, &rows);

    if let Some(r) = reports.first() {
        out.push_str(&summary_markdown(&r.dataset));
    }
    out
}

/// Markdown rendering of a dataset summary.
pub fn summary_markdown(s: &crate::sweep::DatasetSummary) -> String {
    let mut out = String::new();
    out.push_str("## Dataset\n\n");
    let _ = writeln!(
        out,
        "{} images, {} instances evaluated, {} removed by the height filter.\n",
        s.images, s.instances, s.removed_by_height_filter
    );
    let header: Vec<String> = ["Dimension", "Subgroup", "Count", "Share (%)"].iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for d in [&s.legs, &s.elbows, &s.view, &s.size] {
        for e in &d.entries {
            rows.push(vec![d.dimension.clone(), e.value.clone(), e.count.to_string(), format!("{:.1}", e.percent)]);
        }
        if d.unknown > 0 {
            rows.push(vec![d.dimension.clone(), "unknown".into(), d.unknown.to_string(), "NA".into()]);
        }
    }
    md_table(&mut out, &header, &rows);

    let header: Vec<String> = ["Joint", "Visible", "Occluded", "Absent", "Occluded (%)"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = s
        .joints
        .iter()
        .map(|j| {
            vec![
                j.joint.to_string(),
                j.visible.to_string(),
                j.occluded.to_string(),
                j.absent.to_string(),
                num(j.occlusion_percent, 1),
            ]
        })
        .collect();
    md_table(&mut out, &header, &rows);
    let _ = writeln!(out, "Mean occlusion rate: {}%", num(s.mean_occlusion_percent, 1));
    out
}

#[derive(Serialize)]
struct JsonDump<'a> {
    reports: &'a [FairnessReport],
}

/// Lossless JSON dump, including supports and gaps.
pub fn emit_json(reports: &[FairnessReport]) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(&JsonDump { reports }).expect("report serialization cannot fail");
    v.push(b'\n');
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_parsing() {
        assert_eq!("csv".parse::<Format>().unwrap(), Format::Csv);
        assert_eq!("md".parse::<Format>().unwrap(), Format::Markdown);
        assert_eq!("json".parse::<Format>().unwrap(), Format::Json);
        assert!("xml".parse::<Format>().is_err());
    }

    #[test]
    fn empty_report_is_header_only() {
        let csv = String::from_utf8(emit_csv(&[])).unwrap();
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with("detector,tau,mr_pct,eod_pct_legs,h_legs,"));
        assert_eq!(csv.lines().next().unwrap().split(',').count(), 3 + 2 * (5 + 17));
    }

    #[test]
    fn mean_row_gaps() {
        let rows = vec![vec![Some(1.0), None], vec![Some(3.0), Some(2.0)]];
        let m = mean_row("d", "Average", &rows).unwrap();
        assert_eq!(m.values, vec![Some(2.0), None]);
        assert!(mean_row("d", "Average", &[]).is_none());
    }
}
