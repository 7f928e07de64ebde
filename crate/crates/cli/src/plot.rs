//! Minimal deterministic SVG line charts from CSV text.
//!
//! Each requested column becomes one polyline against the row index. Series
//! are normalized independently to the plot height, and the legend reports
//! each series' range, so columns with very different units share one chart.

use std::fmt::Write;

use crate::error::CliError;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 50.0;
const MARGIN_RIGHT: f64 = 190.0;
const MARGIN_Y: f64 = 30.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

struct Series {
    name: String,
    points: Vec<(usize, f64)>,
}

fn read_series(csv_text: &str, columns: &[&str]) -> Result<(Vec<Series>, usize), CliError> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = reader.headers()?.clone();
    let mut index = Vec::with_capacity(columns.len());
    for &col in columns {
        let i = headers
            .iter()
            .position(|h| h == col)
            .ok_or_else(|| CliError::runtime(format!("plot: no column {col:?}")))?;
        index.push(i);
    }
    let mut series: Vec<Series> = columns
        .iter()
        .map(|c| Series {
            name: c.to_string(),
            points: Vec::new(),
        })
        .collect();
    let mut rows = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        for (s, &i) in series.iter_mut().zip(&index) {
            // Empty or non-numeric cells are gaps.
            if let Some(v) = record.get(i).and_then(|v| v.parse::<f64>().ok()) {
                if v.is_finite() {
                    s.points.push((row, v));
                }
            }
        }
        rows = row + 1;
    }
    Ok((series, rows))
}

/// Renders `columns` of `csv_text` as an SVG document.
pub fn emit_plot(csv_text: &str, columns: &[&str]) -> Result<String, CliError> {
    if columns.is_empty() {
        return Err(CliError::runtime("plot: no columns requested"));
    }
    let (series, rows) = read_series(csv_text, columns)?;
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - 2.0 * MARGIN_Y;
    let x_of = |row: usize| {
        let span = rows.saturating_sub(1).max(1) as f64;
        MARGIN_LEFT + plot_w * row as f64 / span
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, y0, x1, y1) = (MARGIN_LEFT, HEIGHT - MARGIN_Y, MARGIN_LEFT + plot_w, MARGIN_Y);
    let _ = writeln!(
        svg,
        r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{x0}" y="{:.1}" font-family="sans-serif" font-size="11">0</text>"#,
        y0 + 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{x1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
        y0 + 16.0,
        rows.saturating_sub(1)
    );

    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let lo = s.points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let hi = s.points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let mut pts = String::new();
        for &(row, v) in &s.points {
            let y = y0 - plot_h * (v - lo) / span;
            if !pts.is_empty() {
                pts.push(' ');
            }
            let _ = write!(pts, "{:.2},{:.2}", x_of(row), y);
        }
        let _ = writeln!(
            svg,
            r#"<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>"#
        );
        let ly = MARGIN_Y + 18.0 * k as f64;
        let lx = x1 + 15.0;
        let range = if s.points.is_empty() {
            "no data".to_string()
        } else {
            format!("{lo:.3}..{hi:.3}")
        };
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{:.1}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11">{} [{}]</text>"#,
            lx + 25.0,
            ly + 4.0,
            escape(&s.name),
            range
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "iteration,w,e\n0,1,1\n1,4,2\n";

    #[test]
    fn one_polyline_per_column() {
        let svg = emit_plot(CSV, &["w", "e"]).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        let svg = emit_plot(CSV, &["w"]).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
    }

    #[test]
    fn deterministic() {
        assert_eq!(emit_plot(CSV, &["w", "e"]).unwrap(), emit_plot(CSV, &["w", "e"]).unwrap());
    }

    #[test]
    fn missing_column_is_an_error() {
        assert!(emit_plot(CSV, &["nope"]).is_err());
        assert!(emit_plot(CSV, &[]).is_err());
    }

    #[test]
    fn empty_cells_are_gaps() {
        let svg = emit_plot("a,b\n1,\n2,3\n", &["a", "b"]).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}
