//! Report rendering. Column orders are fixed and documented; CSV and SVG
//! carry the same numbers (the SVG embeds the CSV verbatim in a metadata
//! block), and all output is byte-deterministic for a given store state
//! and configuration.

use std::fmt::Write as _;

use codemine_core::Result;

use crate::commands::{ExpertsReport, TimeSeriesReport};

pub fn to_json<T: serde::Serialize>(report: &T) -> Result<String> {
    let mut out = serde_json::to_string_pretty(report)
        .map_err(|e| codemine_core::Error::Config(format!("report serialization failed: {e}")))?;
    out.push('\n');
    Ok(out)
}

fn csv_field(value: &str) -> String {
    if value.contains([',', '"', '\n']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

/// Fixed columns: component,rank,author,score,qi,increases,decreases,total_commits
pub fn experts_csv(report: &ExpertsReport) -> String {
    let mut out =
        String::from("component,rank,author,score,qi,increases,decreases,total_commits\n");
    for component in &report.components {
        for entry in &component.experts {
            let e = &entry.expert;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                csv_field(&component.component),
                entry.rank,
                csv_field(&e.author),
                e.score,
                e.qi,
                e.increases,
                e.decreases,
                e.total_commits,
            );
        }
    }
    out
}

/// Fixed columns: week,commit_count,delta_<metric>... in the report's
/// metric order.
pub fn timeseries_csv(report: &TimeSeriesReport) -> String {
    let mut out = String::from("week,commit_count");
    for metric in &report.metrics {
        let _ = write!(out, ",delta_{metric}");
    }
    out.push('\n');
    for bucket in &report.buckets {
        let _ = write!(out, "{},{}", bucket.week, bucket.commit_count);
        for delta in &bucket.deltas {
            let _ = write!(out, ",{delta}");
        }
        out.push('\n');
    }
    out
}

const CHART_WIDTH: f64 = 900.0;
const CHART_HEIGHT: f64 = 320.0;
const MARGIN_LEFT: f64 = 50.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 50.0;

fn metric_color(metric: codemine_core::squale::MetricId) -> &'static str {
    use codemine_core::squale::MetricId::*;
    match metric {
        Cc => "#4477aa",
        Hv => "#55aa55",
        Hd => "#ee8833",
        Ca => "#aa4499",
        Ce => "#999933",
    }
}

/// Self-contained static chart: one line per metric (deltas normalized
/// per metric to share the vertical axis), grey bars for commit counts,
/// and the exact CSV series embedded in a `<metadata>` element.
pub fn timeseries_svg(report: &TimeSeriesReport) -> String {
    let csv = timeseries_csv(report);
    let buckets = &report.buckets;
    let n = buckets.len();

    let plot_width = CHART_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_height = CHART_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_of = |i: usize| -> f64 {
        if n <= 1 {
            MARGIN_LEFT + plot_width / 2.0
        } else {
            MARGIN_LEFT + plot_width * i as f64 / (n - 1) as f64
        }
    };
    let midline = MARGIN_TOP + plot_height / 2.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{CHART_WIDTH}" height="{CHART_HEIGHT}" viewBox="0 0 {CHART_WIDTH} {CHART_HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        "<metadata id=\"series-csv\"><![CDATA[\n{csv}]]></metadata>"
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{CHART_WIDTH}" height="{CHART_HEIGHT}" fill="white"/>"#
    );

    // Commit-count bars from the baseline.
    let max_commits = buckets.iter().map(|b| b.commit_count).max().unwrap_or(0);
    if max_commits > 0 {
        let bar_width = (plot_width / n.max(1) as f64 * 0.6).min(40.0);
        for (i, bucket) in buckets.iter().enumerate() {
            let height = plot_height * bucket.commit_count as f64 / max_commits as f64;
            let x = x_of(i) - bar_width / 2.0;
            let y = MARGIN_TOP + plot_height - height;
            let _ = writeln!(
                svg,
                r##"<rect x="{x:.2}" y="{y:.2}" width="{bar_width:.2}" height="{height:.2}" fill="#cccccc"/>"##
            );
        }
    }

    // Axis line at delta zero.
    let _ = writeln!(
        svg,
        r##"<line x1="{MARGIN_LEFT}" y1="{midline:.2}" x2="{:.2}" y2="{midline:.2}" stroke="#888888" stroke-dasharray="4 3"/>"##,
        MARGIN_LEFT + plot_width
    );

    // One normalized polyline per metric.
    for (m, metric) in report.metrics.iter().enumerate() {
        let scale = buckets
            .iter()
            .map(|b| b.deltas[m].abs())
            .fold(0.0f64, f64::max);
        let points: Vec<String> = buckets
            .iter()
            .enumerate()
            .map(|(i, bucket)| {
                let normalized = if scale > 0.0 {
                    bucket.deltas[m] / scale
                } else {
                    0.0
                };
                let y = midline - normalized * (plot_height / 2.0 - 6.0);
                format!("{:.2},{y:.2}", x_of(i))
            })
            .collect();
        if !points.is_empty() {
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
                metric_color(*metric),
                points.join(" ")
            );
        }
        // Legend.
        let legend_x = MARGIN_LEFT + 8.0 + m as f64 * 90.0;
        let _ = writeln!(
            svg,
            r#"<text x="{legend_x:.2}" y="{:.2}" font-family="sans-serif" font-size="12" fill="{}">delta_{metric}</text>"#,
            MARGIN_TOP + 12.0,
            metric_color(*metric),
        );
    }

    // Week labels, thinned to at most ~12.
    let step = (n / 12).max(1);
    for (i, bucket) in buckets.iter().enumerate() {
        if i % step != 0 {
            continue;
        }
        let _ = writeln!(
            svg,
            r##"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" fill="#333333" text-anchor="middle">{}</text>"##,
            x_of(i),
            CHART_HEIGHT - MARGIN_BOTTOM + 16.0,
            bucket.week,
        );
    }

    svg.push_str("</svg>\n");
    svg
}

/// The CSV embedded in an SVG chart, for equality checks against the CSV
/// output path.
pub fn csv_embedded_in_svg(svg: &str) -> Option<&str> {
    let start = svg.find("<![CDATA[\n")? + "<![CDATA[\n".len();
    let end = svg[start..].find("]]>")? + start;
    Some(&svg[start..end])
}
