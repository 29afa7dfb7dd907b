//! The observed data (response plus covariates) and delimited-text ingestion.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numkit::Matrix;

/// Response vector `y` and covariate matrix `x` (no intercept column).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    y: Vec<f64>,
    x: Matrix,
}

impl Dataset {
    pub fn new(y: Vec<f64>, x: Matrix) -> Result<Self> {
        if y.len() != x.rows() {
            return Err(Error::DimensionMismatch(format!(
                "response has {} entries but covariates have {} rows",
                y.len(),
                x.rows()
            )));
        }
        if y.len() < x.cols() + 3 {
            return Err(Error::InvalidInput(format!(
                "need at least m + 3 = {} observations, got {}",
                x.cols() + 3,
                y.len()
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite response at row {i}")));
        }
        Ok(Self { y, x })
    }

    /// Convenience constructor for a single covariate.
    pub fn univariate(y: Vec<f64>, x: &[f64]) -> Result<Self> {
        Self::new(y, Matrix::column_vector(x)?)
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn m(&self) -> usize {
        self.x.cols()
    }

    /// Observations in the given order; indices may repeat (bootstrap).
    pub fn resample(&self, indices: &[usize]) -> Result<Self> {
        let y = indices.iter().map(|&i| self.y[i]).collect();
        Self::new(y, self.x.select_rows(indices))
    }

    /// Same response with every covariate multiplied by `factor`.
    pub fn with_scaled_covariates(&self, factor: f64) -> Result<Self> {
        Self::new(self.y.clone(), self.x.scaled(factor))
    }
}

/// Delimited text dialect used by [`read_table`].
#[derive(Debug, Clone, Copy)]
pub struct CsvOptions {
    pub delimiter: u8,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { delimiter: b',' }
    }
}

/// Named numeric columns read from a file, after dropping incomplete rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    /// Rows removed because a requested column was missing.
    pub dropped_rows: usize,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    /// Builds a [`Dataset`] from a response column and covariate columns.
    pub fn to_dataset(&self, response: &str, covariates: &[String]) -> Result<Dataset> {
        let (y, x) = self.to_arrays(response, covariates)?;
        Dataset::new(y, x)
    }

    /// Response vector and covariate matrix without the dataset size checks.
    pub fn to_arrays(&self, response: &str, covariates: &[String]) -> Result<(Vec<f64>, Matrix)> {
        let y = self
            .column(response)
            .ok_or_else(|| Error::ColumnNotFound(response.to_string()))?
            .to_vec();
        let cols: Vec<&[f64]> = covariates
            .iter()
            .map(|c| self.column(c).ok_or_else(|| Error::ColumnNotFound(c.clone())))
            .collect::<Result<_>>()?;
        if cols.is_empty() {
            return Err(Error::InvalidInput("at least one covariate is required".into()));
        }
        let n = y.len();
        let mut data = Vec::with_capacity(n * cols.len());
        for i in 0..n {
            data.extend(cols.iter().map(|c| c[i]));
        }
        let x = Matrix::new(n, cols.len(), data)?;
        Ok((y, x))
    }

    /// Writes the table back out with a header row.
    pub fn write_csv<W: std::io::Write>(&self, writer: W, options: CsvOptions) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .delimiter(options.delimiter)
            .from_writer(writer);
        w.write_record(&self.names)?;
        for i in 0..self.n_rows() {
            w.write_record(self.columns.iter().map(|c| c[i].to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn is_missing(field: &str) -> bool {
    matches!(field, "" | "NA" | "na" | "NaN" | "nan" | "null" | "NULL" | ".")
}

/// `volatile acidity`, `volatile.acidity` and `volatile_acidity` all match.
fn normalize_name(name: &str) -> String {
    name.trim()
        .chars()
        .map(|c| {
            if c.is_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '.'
            }
        })
        .collect()
}

fn resolve_column(headers: &csv::StringRecord, wanted: &str) -> Result<usize> {
    if let Some(i) = headers.iter().position(|h| h.trim() == wanted) {
        return Ok(i);
    }
    let key = normalize_name(wanted);
    headers
        .iter()
        .position(|h| normalize_name(h) == key)
        .ok_or_else(|| Error::ColumnNotFound(wanted.to_string()))
}

/// Reads the requested columns from delimited text with a header row.
///
/// Rows where any requested column is empty or `NA` are dropped and counted.
/// Any other non-numeric entry is a parse error reporting the 1-based data
/// row and column name.
pub fn read_table_from<R: std::io::Read>(reader: R, columns: &[String], options: CsvOptions) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| resolve_column(&headers, c))
        .collect::<Result<_>>()?;

    let mut out = vec![Vec::new(); columns.len()];
    let mut dropped = 0;
    let mut row_values = vec![0.0; columns.len()];
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let mut missing = false;
        for (k, &j) in idx.iter().enumerate() {
            let field = record.get(j).unwrap_or("");
            if is_missing(field) {
                missing = true;
                continue;
            }
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                row: row + 1,
                column: columns[k].clone(),
                message: format!("'{field}' is not a number"),
            })?;
            if !value.is_finite() {
                missing = true;
            }
            row_values[k] = value;
        }
        if missing {
            dropped += 1;
            continue;
        }
        for (col, v) in out.iter_mut().zip(&row_values) {
            col.push(*v);
        }
    }
    Ok(Table {
        names: columns.to_vec(),
        columns: out,
        dropped_rows: dropped,
    })
}

pub fn read_table(path: &Path, columns: &[String], options: CsvOptions) -> Result<Table> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let file = std::fs::File::open(path)?;
    read_table_from(std::io::BufReader::new(file), columns, options)
}
