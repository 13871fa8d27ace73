//! CSV assembly with deterministic byte output: fixed column order per
//! scenario family, reals printed to 6 significant digits, counts printed
//! raw, cells left empty where a mode does not produce the quantity.

use std::io::Write;
use std::path::Path;

/// Formats a real to 6 significant digits in plain decimal notation.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    let precision = (5 - exponent).max(0) as usize;
    format!("{x:.precision$}")
}

/// One CSV row under construction; empty cells stand for quantities the
/// mode does not produce.
#[derive(Debug, Default, Clone)]
pub struct Row {
    cells: Vec<String>,
}

impl Row {
    pub fn text(mut self, value: impl Into<String>) -> Self {
        self.cells.push(value.into());
        self
    }

    pub fn real(mut self, value: Option<f64>) -> Self {
        self.cells.push(value.map(fmt_sig).unwrap_or_default());
        self
    }

    pub fn count(mut self, value: Option<u64>) -> Self {
        self.cells
            .push(value.map(|v| v.to_string()).unwrap_or_default());
        self
    }

    pub fn flag(mut self, value: bool) -> Self {
        self.cells.push(value.to_string());
        self
    }

    pub fn cells(&self) -> &[String] {
        &self.cells
    }
}

/// Serializes header and rows; the output always ends in a newline and a
/// header-only table is a single line.
pub fn render(header: &[&str], rows: &[Row]) -> String {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.cells.len(), header.len());
        text.push_str(&row.cells.join(","));
        text.push('\n');
    }
    text
}

pub fn write_file(path: &Path, contents: &str) -> std::io::Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(contents.as_bytes())?;
    file.flush()
}
