//! Numeric CSV tables with named columns and `#` comment lines.

use std::fmt::Write as _;

use crate::error::CliError;

/// Reads the `required` columns (in order) followed by the `optional` ones,
/// which are `NaN` when absent.
pub fn read(path: &str, key: &str, required: &[&str], optional: &[&str]) -> Result<Vec<Vec<f64>>, CliError> {
    if path.is_empty() {
        return Err(CliError::input(key, "a file path is required"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::input(key, format!("{path}: {e}")))?;
    let headers = reader.headers().map_err(|e| CliError::input(key, format!("{path}: {e}")))?.clone();
    let index = |name: &str| headers.iter().position(|h| h == name);
    let mut cols = Vec::new();
    for name in required {
        cols.push(Some(index(name).ok_or_else(|| CliError::input(key, format!("{path}: missing column '{name}'")))?));
    }
    cols.extend(optional.iter().map(|n| index(n)));
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::input(key, format!("{path}: {e}")))?;
        let mut row = Vec::with_capacity(cols.len());
        for c in &cols {
            row.push(match c {
                Some(c) => {
                    let field = rec.get(*c).unwrap_or("");
                    field
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| CliError::input(key, format!("{path}: row {}: '{field}' is not a finite number", line + 1)))?
                }
                None => f64::NAN,
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Shortest round-trip decimal; exponent notation outside `[1e-5, 1e16)`.
pub fn num(x: f64) -> String {
    let x = x + 0.0;
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Accumulates `# key=value` header lines followed by CSV rows.
#[derive(Default)]
pub struct Report {
    text: String,
}

impl Report {
    pub fn new(header: &[(String, String)]) -> Self {
        let mut r = Report::default();
        for (k, v) in header {
            r.comment(k, v);
        }
        r
    }

    pub fn comment(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "# {key}={value}");
    }

    pub fn line(&mut self, line: &str) {
        self.text.push_str(line);
        self.text.push('\n');
    }

    pub fn row(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|&v| num(v)).collect();
        self.line(&cells.join(","));
    }

    pub fn into_string(self) -> String {
        self.text
    }
}
