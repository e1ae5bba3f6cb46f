//! Sweep tables and their CSV form.

use std::io::Write;
use std::path::Path;

use super::CliError;

/// Rows of `(g, quantity...)` with strictly increasing `g` and finite values.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
    dropped: Vec<(f64, String)>,
}

impl SweepTable {
    /// `header[0]` names the coupling column.
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        SweepTable { header: header.into_iter().map(Into::into).collect(), rows: vec![], dropped: vec![] }
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Couplings rejected so far, with the reason.
    pub fn dropped(&self) -> &[(f64, String)] {
        &self.dropped
    }

    /// Appends a row; non-finite rows are dropped and recorded instead.
    pub fn push(&mut self, g: f64, values: &[f64]) -> Result<(), CliError> {
        if values.len() + 1 != self.header.len() {
            return Err(CliError::Internal(format!(
                "row has {} columns, header has {}",
                values.len() + 1,
                self.header.len()
            )));
        }
        if let Some(last) = self.rows.last() {
            if !(g > last[0]) {
                return Err(CliError::Internal(format!("coupling {g} does not follow {}", last[0])));
            }
        }
        if !g.is_finite() || values.iter().any(|v| !v.is_finite()) {
            self.dropped.push((g, "non-finite value".into()));
            return Ok(());
        }
        let mut row = Vec::with_capacity(values.len() + 1);
        row.push(g);
        row.extend_from_slice(values);
        self.rows.push(row);
        Ok(())
    }

    /// Records a coupling that could not be evaluated.
    pub fn drop_point(&mut self, g: f64, reason: impl Into<String>) {
        self.dropped.push((g, reason.into()));
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:.16e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }
}

/// Writes `table` to `path`, reporting IO failures with the path.
pub fn emit_csv(table: &SweepTable, path: &Path) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io { path: path.to_path_buf(), message: e.to_string() };
    let file = std::fs::File::create(path).map_err(io)?;
    table.write_csv(std::io::BufWriter::new(file)).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
