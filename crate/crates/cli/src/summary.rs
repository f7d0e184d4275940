//! Sweep aggregation: one row per width, CSV with a `#schema=` line, and an
//! SVG trend chart.

use std::fmt::Write as _;
use std::path::Path;

use capmeter_core::bounds::BoundPanel;
use capmeter_core::measures::MeasurePanel;

use crate::error::{CliError, CliResult};

pub const SCHEMA: &str = "capmeter.sweep_summary/1";
pub const NORM_PREFIX: &str = "norm_";

/// Everything reported for one trained width.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub h: usize,
    pub epochs: usize,
    /// `None` when no held-out data was available.
    pub test_error: Option<f64>,
    pub measures: MeasurePanel,
    pub bounds: BoundPanel,
}

/// Column-major view of a sweep. Values are `NaN` where not applicable.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub columns: Vec<String>,
    /// Columns that also get a max-normalized copy.
    pub bound_columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn row_values(r: &SummaryRow) -> (Vec<(String, f64)>, Vec<(String, f64)>) {
    let m = &r.measures;
    let b = &r.bounds;
    let mut base: Vec<(String, f64)> = vec![
        ("h".into(), r.h as f64),
        ("epochs".into(), r.epochs as f64),
        ("train_error".into(), m.train_error),
        ("test_error".into(), r.test_error.unwrap_or(f64::NAN)),
        ("gamma_5pct".into(), m.gamma_5pct),
        ("beta_max".into(), m.beta_summary.max),
        ("beta_mean".into(), m.beta_summary.mean),
        ("beta_median".into(), m.beta_summary.median),
        ("alpha_max".into(), m.alpha_summary.max),
        ("alpha_mean".into(), m.alpha_summary.mean),
        ("alpha_median".into(), m.alpha_summary.median),
        ("gamma".into(), b.gamma),
        ("delta".into(), b.delta),
        ("empirical_margin_loss".into(), b.empirical_margin_loss),
    ];
    let mut bounds: Vec<(String, f64)> = vec![
        ("thm1_first_form".into(), b.thm1_first_form),
        ("thm1_second_form".into(), b.thm1_second_form),
        ("thm2_bound".into(), b.thm2_bound),
    ];
    bounds.extend(b.thm4_bound.iter().map(|(p, v)| (format!("thm4_bound_p{p}"), *v)));
    bounds.push(("capacity_numerator".into(), b.capacity_numerator));
    bounds.extend(b.table1.iter().map(|(row, v)| (format!("table1_row{row}"), *v)));
    base.push(("thm2_total".into(), b.thm2_total));
    base.extend(b.thm4_total.iter().map(|(p, v)| (format!("thm4_total_p{p}"), *v)));
    (base, bounds)
}

impl SweepSummary {
    /// Sorts by `h` and appends the max-normalized bound columns.
    pub fn build(mut rows: Vec<SummaryRow>) -> CliResult<Self> {
        if rows.is_empty() {
            return Err(CliError::invalid("no checkpoints to summarize"));
        }
        rows.sort_by_key(|r| r.h);
        let mut columns = Vec::new();
        let mut bound_columns = Vec::new();
        let mut table = Vec::new();
        for r in &rows {
            let (base, bounds) = row_values(r);
            let names: Vec<String> = base.iter().chain(&bounds).map(|(n, _)| n.clone()).collect();
            if columns.is_empty() {
                columns = names;
                bound_columns = bounds.iter().map(|(n, _)| n.clone()).collect();
            } else if columns != names {
                return Err(CliError::invalid(format!("h={}: bound columns differ from the other rows", r.h)));
            }
            table.push(base.into_iter().chain(bounds).map(|(_, v)| v).collect::<Vec<f64>>());
        }
        let n_base = columns.len();
        for (j, name) in bound_columns.iter().enumerate() {
            let col = n_base - bound_columns.len() + j;
            let max = table.iter().map(|row| row[col]).fold(f64::NEG_INFINITY, f64::max);
            if !(max > 0.0 && max.is_finite()) {
                return Err(CliError::invalid(format!("column {name} has no positive finite maximum")));
            }
            for row in &mut table {
                let v = row[col];
                row.push(v / max);
            }
            columns.push(format!("{NORM_PREFIX}{name}"));
        }
        Ok(Self { columns, bound_columns, rows: table })
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        self.column_index(name).map(|j| self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn normalized_columns(&self) -> Vec<String> {
        self.bound_columns.iter().map(|c| format!("{NORM_PREFIX}{c}")).collect()
    }

    /// CSV text: `#schema=` line, header, one row per width. `NaN` is empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let types: Vec<String> = self
            .columns
            .iter()
            .map(|c| format!("{c}:{}", if c == "h" || c == "epochs" { "int" } else { "float" }))
            .collect();
        let _ = writeln!(out, "#schema={SCHEMA};{}", types.join(";"));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|v| fmt_value(*v))).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii"));
        out
    }
}

pub fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 230.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 10] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Standalone SVG: `h` on a log2 axis, one polyline per column, y from 0 to
/// the largest plotted value.
pub fn render_svg(summary: &SweepSummary, columns: &[String]) -> CliResult<String> {
    if summary.rows.len() < 2 {
        return Err(CliError::invalid(format!("a chart needs at least 2 rows, got {}", summary.rows.len())));
    }
    if columns.is_empty() {
        return Err(CliError::invalid("no columns to plot"));
    }
    let hs = summary.column("h").expect("h column");
    let mut series = Vec::new();
    for name in columns {
        let values = summary.column(name).ok_or_else(|| CliError::invalid(format!("unknown column {name:?}")))?;
        series.push((name, values));
    }
    let xs: Vec<f64> = hs.iter().map(|h| h.log2()).collect();
    let (x0, x1) = (xs[0], xs[xs.len() - 1]);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| if x1 > x0 { LEFT + (x - x0) / (x1 - x0) * plot_w } else { LEFT + plot_w / 2.0 };
    let ymax = series
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .filter(|v| v.is_finite())
        .fold(0.0_f64, f64::max);
    let ymax = if ymax > 0.0 { ymax } else { 1.0 };
    let py = |y: f64| TOP + (1.0 - y / ymax) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (bx, by) = (LEFT, TOP + plot_h);
    let _ = writeln!(s, r#"<line class="axis" x1="{bx}" y1="{by}" x2="{:.2}" y2="{by}" stroke="black"/>"#, LEFT + plot_w);
    let _ = writeln!(s, r#"<line class="axis" x1="{bx}" y1="{TOP}" x2="{bx}" y2="{by}" stroke="black"/>"#);
    for (h, x) in hs.iter().zip(&xs) {
        let x = px(*x);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{by}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, by + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{h}</text>"#, by + 18.0);
    }
    for i in 0..=4 {
        let v = ymax * f64::from(i) / 4.0;
        let y = py(v);
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{bx}" y2="{y:.2}" stroke="black"/>"#, bx - 5.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, bx - 8.0, y + 4.0, fmt_tick(v));
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">hidden units h (log2 scale)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">value</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );
    for (k, (name, values)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = xs
            .iter()
            .zip(values)
            .filter(|(_, v)| v.is_finite())
            .map(|(x, v)| format!("{:.2},{:.2}", px(*x), py(*v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-column="{}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            escape(name),
            points.join(" ")
        );
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = LEFT + plot_w + 15.0;
        let _ = writeln!(s, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 26.0, ly + 4.0, escape(name));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        format!("{:.3}", v)
    } else {
        format!("{v:.2e}")
    }
}

/// Renders with [`render_svg`] and writes atomically.
pub fn emit_svg(summary: &SweepSummary, columns: &[String], path: &Path) -> CliResult<()> {
    let svg = render_svg(summary, columns)?;
    crate::write_output(path, svg.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(rows: &[[f64; 3]]) -> SweepSummary {
        let columns = vec!["h".to_string(), "a".into(), "norm_a".into()];
        SweepSummary { columns, bound_columns: vec!["a".into()], rows: rows.iter().map(|r| r.to_vec()).collect() }
    }

    #[test]
    fn one_row_is_rejected() {
        assert!(render_svg(&summary(&[[64.0, 1.0, 1.0]]), &["a".into()]).is_err());
    }

    #[test]
    fn two_rows_one_polyline_two_points() {
        let svg = render_svg(&summary(&[[64.0, 1.0, 0.5], [128.0, 2.0, 1.0]]), &["a".into()]).unwrap();
        let lines: Vec<&str> = svg.lines().filter(|l| l.contains("<polyline")).collect();
        assert_eq!(lines.len(), 1);
        let pts = lines[0].split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
        assert_eq!(pts.split(' ').count(), 2);
    }

    #[test]
    fn unknown_column_is_rejected() {
        assert!(render_svg(&summary(&[[64.0, 1.0, 0.5], [128.0, 2.0, 1.0]]), &["zzz".into()]).is_err());
    }

    #[test]
    fn csv_has_schema_and_blank_nan() {
        let csv = summary(&[[64.0, f64::NAN, 1.0]]).to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "#schema=capmeter.sweep_summary/1;h:int;a:float;norm_a:float");
        assert_eq!(lines.next().unwrap(), "h,a,norm_a");
        assert_eq!(lines.next().unwrap(), "64,,1");
    }
}
