//! Plain-text tables for the terminal and CSV files for everything else.

use std::io::Write;
use std::path::Path;

use crate::error::{runtime, CliResult};

/// A header plus string cells, rendered either as an aligned text table or
/// as CSV.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push<S: Into<String>>(&mut self, row: impl IntoIterator<Item = S>) {
        self.rows.push(row.into_iter().map(Into::into).collect());
    }

    pub fn render(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: &[String]| -> String {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let mut out = line(&self.header);
        out.push('\n');
        out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
        for row in &self.rows {
            out.push('\n');
            out.push_str(&line(row));
        }
        out
    }

    /// Prints to stdout; a closed pipe (`| head`) is not an error.
    pub fn print(&self) {
        let _ = writeln!(std::io::stdout().lock(), "{}", self.render());
    }

    pub fn write_csv(&self, path: &Path) -> CliResult<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
        }
        let mut w = csv::Writer::from_path(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        w.write_record(&self.header).map_err(runtime)?;
        for row in &self.rows {
            w.write_record(row).map_err(runtime)?;
        }
        w.flush().map_err(|e| runtime(format!("{}: {e}", path.display())))
    }
}

/// Fixed-precision cell; empty for an undefined value.
pub fn num(v: Option<f64>, digits: usize) -> String {
    match v {
        Some(x) if x.is_infinite() => {
            if x > 0.0 {
                "inf".into()
            } else {
                "-inf".into()
            }
        }
        Some(x) => format!("{x:.digits$}"),
        None => String::new(),
    }
}

/// Full-precision cell for machine-readable output.
pub fn raw(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn pval(p: f64) -> String {
    if p < 1e-4 {
        format!("{p:.3e}")
    } else {
        format!("{p:.4}")
    }
}
