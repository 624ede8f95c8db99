//! Table and CSV rendering.

use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    /// Human-aligned columns.
    #[default]
    Table,
    /// Comma-delimited, full precision.
    Csv,
}

/// Render rows either as an aligned text table or as CSV.
pub fn render(format: OutputFormat, headers: &[&str], rows: &[Vec<String>]) -> String {
    match format {
        OutputFormat::Table => render_table(headers, rows),
        OutputFormat::Csv => render_csv(headers, rows),
    }
}

pub fn render_csv(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&headers.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn render_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate().take(cols) {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let emit = |out: &mut String, cells: &[String]| {
        for (i, cell) in cells.iter().enumerate().take(cols) {
            if i > 0 {
                out.push_str("  ");
            }
            if i == 0 {
                out.push_str(&format!("{:<width$}", cell, width = widths[i]));
            } else {
                out.push_str(&format!("{:>width$}", cell, width = widths[i]));
            }
        }
        out.push('\n');
    };
    emit(
        &mut out,
        &headers.iter().map(|h| h.to_string()).collect::<Vec<_>>(),
    );
    for row in rows {
        emit(&mut out, row);
    }
    out
}

/// Percentage with one decimal, rounded half away from zero (table layouts).
pub fn pct1(p: f64) -> String {
    format!("{:.1}%", (p * 1000.0).round() / 10.0)
}

pub fn opt_pct1(p: Option<f64>) -> String {
    p.map(pct1).unwrap_or_default()
}

/// Two-decimal standard score.
pub fn z2(z: f64) -> String {
    format!("{:.2}", (z * 100.0).round() / 100.0)
}

pub fn opt_z2(z: Option<f64>) -> String {
    z.map(z2).unwrap_or_default()
}

/// Full-precision float for machine-readable output.
pub fn full(x: f64) -> String {
    format!("{x}")
}

pub fn opt_full(x: Option<f64>) -> String {
    x.map(full).unwrap_or_default()
}
