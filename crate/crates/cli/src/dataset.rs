//! CSV ingestion: comma-separated, mandatory header row, UTF-8, '.' decimals.

use std::path::Path;

use imflow_core::mlp::Dataset;
use imflow_core::prob::encode_categorical;
use imflow_core::{Discretizer, Matrix, Symbol};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| CliError::io(format!("cannot open {}", path.display()), e))?;
        Self::from_reader(file)
    }

    pub fn from_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if headers.is_empty() || headers.iter().all(String::is_empty) {
            return Err(CliError::Input("CSV has no header row".into()));
        }
        for (i, h) in headers.iter().enumerate() {
            if headers[..i].contains(h) {
                return Err(CliError::Input(format!("duplicate column {h:?}")));
            }
        }
        let mut rows = Vec::new();
        for record in rdr.records() {
            rows.push(record?.iter().map(str::to_string).collect());
        }
        if rows.is_empty() {
            return Err(CliError::Input("CSV has no data rows".into()));
        }
        Ok(CsvTable { headers, rows })
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Input(format!("column {name:?} not found; have {:?}", self.headers)))
    }

    pub fn numeric(&self, columns: &[String]) -> Result<Matrix> {
        let idx = columns
            .iter()
            .map(|c| self.column_index(c))
            .collect::<Result<Vec<_>>>()?;
        let mut data = Vec::with_capacity(self.rows.len() * idx.len());
        for (r, row) in self.rows.iter().enumerate() {
            for &j in &idx {
                let raw = &row[j];
                let v: f64 = raw.parse().map_err(|_| {
                    CliError::Input(format!(
                        "row {}: column {:?} value {raw:?} is not a number",
                        r + 1,
                        self.headers[j]
                    ))
                })?;
                if !v.is_finite() {
                    return Err(CliError::Input(format!(
                        "row {}: column {:?} is not finite",
                        r + 1,
                        self.headers[j]
                    )));
                }
                data.push(v);
            }
        }
        Ok(Matrix::from_vec(self.rows.len(), idx.len(), data)?)
    }

    /// One symbol per distinct tuple of raw strings, in order of first appearance.
    pub fn categorical(&self, columns: &[String]) -> Result<Vec<Symbol>> {
        let idx = columns
            .iter()
            .map(|c| self.column_index(c))
            .collect::<Result<Vec<_>>>()?;
        let tuples: Vec<Vec<&str>> = self
            .rows
            .iter()
            .map(|row| idx.iter().map(|&j| row[j].as_str()).collect())
            .collect();
        Ok(encode_categorical(&tuples))
    }

    /// Symbols for a role: exact categories, or the discretized numeric columns.
    pub fn symbols(&self, columns: &[String], categorical: bool, disc: &Discretizer) -> Result<Vec<Symbol>> {
        if categorical {
            self.categorical(columns)
        } else {
            Ok(disc.discretize(&self.numeric(columns)?)?)
        }
    }

    /// Inputs from `x` and a single binary target column.
    pub fn binary_dataset(&self, x: &[String], y: &str) -> Result<Dataset> {
        let inputs = self.numeric(x)?;
        let j = self.column_index(y)?;
        let mut targets = Vec::with_capacity(self.rows.len());
        for (r, row) in self.rows.iter().enumerate() {
            match row[j].parse::<f64>() {
                Ok(v) if v == 0.0 || v == 1.0 => targets.push(v),
                _ => {
                    return Err(CliError::Input(format!(
                        "row {}: target {y:?} must be 0 or 1, got {:?}",
                        r + 1,
                        row[j]
                    )))
                }
            }
        }
        Ok(Dataset::new(inputs, Matrix::from_vec(targets.len(), 1, targets)?)?)
    }
}

pub fn write_csv<P: AsRef<Path>>(path: P, headers: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let path = path.as_ref();
    let mut w =
        csv::Writer::from_path(path).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    w.write_record(headers)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()
        .map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))
}
