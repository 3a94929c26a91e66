//! Dense dataset with named columns and a response vector.
//!
//! Missing feature values are carried as NaN; the response must be complete.
//! Categorical input is rejected at parse time: columns must arrive
//! dummy-coded.

use crate::error::{Error, Result};
use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

#[derive(Clone, Debug)]
pub struct Dataset {
    feature_names: Vec<String>,
    response_name: String,
    /// Row-major n × p, NaN = missing.
    features: Vec<f64>,
    y: Vec<f64>,
}

impl Dataset {
    pub fn from_parts(
        feature_names: Vec<String>,
        features: Vec<f64>,
        response_name: String,
        y: Vec<f64>,
    ) -> Result<Self> {
        let p = feature_names.len();
        if y.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if features.len() != p * y.len() {
            return Err(Error::Invalid(format!(
                "feature matrix has {} entries, expected {} x {}",
                features.len(),
                y.len(),
                p
            )));
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Invalid(format!("duplicate column name `{name}`")));
            }
        }
        if y.iter().any(|v| v.is_nan()) {
            return Err(Error::Invalid("missing value in response column".into()));
        }
        Ok(Self {
            feature_names,
            response_name,
            features,
            y,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_cols(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn response_name(&self) -> &str {
        &self.response_name
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.features[row * self.n_cols() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let p = self.n_cols();
        &self.features[row * p..(row + 1) * p]
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    /// New dataset holding the given rows, in order.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let p = self.n_cols();
        let mut features = Vec::with_capacity(rows.len() * p);
        let mut y = Vec::with_capacity(rows.len());
        for &r in rows {
            features.extend_from_slice(self.row(r));
            y.push(self.y[r]);
        }
        Dataset::from_parts(
            self.feature_names.clone(),
            features,
            self.response_name.clone(),
            y,
        )
    }

    /// Replace every value of one feature column; used by partial dependence.
    pub fn overwrite_column(&mut self, col: usize, value: f64) {
        let p = self.n_cols();
        for r in 0..self.n_rows() {
            self.features[r * p + col] = value;
        }
    }

    pub fn read_csv(path: &Path, response_column: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Csv(e.to_string()))?;
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Csv(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let response_idx = header
            .iter()
            .position(|h| h == response_column)
            .ok_or_else(|| Error::Csv(format!("response column `{response_column}` not found")))?;

        let feature_names: Vec<String> = header
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != response_idx)
            .map(|(_, h)| h.clone())
            .collect();

        let mut features = Vec::new();
        let mut y = Vec::new();
        for (row_idx, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Csv(e.to_string()))?;
            let row_no = row_idx + 1;
            for (col, cell) in record.iter().enumerate() {
                let column = header[col].clone();
                let value = if cell.is_empty() {
                    if col == response_idx {
                        return Err(Error::CsvData {
                            row: row_no,
                            column,
                            message: "missing value in response".into(),
                        });
                    }
                    f64::NAN
                } else {
                    cell.parse::<f64>().map_err(|_| Error::CsvData {
                        row: row_no,
                        column,
                        message: format!(
                            "non-numeric cell `{cell}`; categorical columns must be dummy-coded before loading"
                        ),
                    })?
                };
                if col == response_idx {
                    y.push(value);
                } else {
                    features.push(value);
                }
            }
        }
        Dataset::from_parts(feature_names, features, response_column.to_string(), y)
    }

    /// Read a feature-only CSV (no response column); `y` is filled with
    /// zeros so prediction-time inputs share the Dataset plumbing.
    pub fn read_features_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Csv(e.to_string()))?;
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Csv(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut features = Vec::new();
        let mut n_rows = 0usize;
        for (row_idx, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Csv(e.to_string()))?;
            n_rows += 1;
            for (col, cell) in record.iter().enumerate() {
                let value = if cell.is_empty() {
                    f64::NAN
                } else {
                    cell.parse::<f64>().map_err(|_| Error::CsvData {
                        row: row_idx + 1,
                        column: header[col].clone(),
                        message: format!(
                            "non-numeric cell `{cell}`; categorical columns must be dummy-coded before loading"
                        ),
                    })?
                };
                features.push(value);
            }
        }
        Dataset::from_parts(header, features, String::new(), vec![0.0; n_rows])
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(&self.response_name);
        writeln!(out, "{}", header.join(","))?;
        for r in 0..self.n_rows() {
            let mut cells: Vec<String> = self.row(r).iter().map(|&v| format_cell(v)).collect();
            cells.push(format_cell(self.y[r]));
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// 17 significant digits: enough to round-trip any f64; missing as empty.
pub fn format_cell(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:.16e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_well_formed_file() {
        let f = write_temp("a,b,y\n1,2,3\n4,5,6\n");
        let d = Dataset::read_csv(f.path(), "y").unwrap();
        assert_eq!(d.n_rows(), 2);
        assert_eq!(d.n_cols(), 2);
        assert_eq!(d.y(), &[3.0, 6.0]);
        assert_eq!(d.value(1, 0), 4.0);
    }

    #[test]
    fn empty_cell_becomes_missing() {
        let f = write_temp("a,b,y\n1,,3\n4,5,6\n");
        let d = Dataset::read_csv(f.path(), "y").unwrap();
        assert!(d.value(0, 1).is_nan());
        assert_eq!(d.value(1, 1), 5.0);
    }

    #[test]
    fn non_numeric_cell_names_row_and_column() {
        let mut body = String::from("area,y\n");
        for _ in 0..6 {
            body.push_str("1,2\n");
        }
        body.push_str("abc,2\n");
        let f = write_temp(&body);
        match Dataset::read_csv(f.path(), "y") {
            Err(Error::CsvData { row, column, .. }) => {
                assert_eq!(row, 7);
                assert_eq!(column, "area");
            }
            other => panic!("expected CsvData error, got {other:?}"),
        }
    }

    #[test]
    fn missing_response_column_rejected() {
        let f = write_temp("a,b\n1,2\n");
        assert!(Dataset::read_csv(f.path(), "y").is_err());
    }

    #[test]
    fn missing_value_in_response_rejected() {
        let f = write_temp("a,y\n1,\n");
        assert!(Dataset::read_csv(f.path(), "y").is_err());
    }

    #[test]
    fn write_read_round_trip_is_exact() {
        let names = vec!["a".to_string(), "b".to_string()];
        let features = vec![0.1, f64::NAN, 1.0 / 3.0, -2.5e-17];
        let d = Dataset::from_parts(names, features, "y".into(), vec![std::f64::consts::PI, 2.0])
            .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        d.write_csv(f.path()).unwrap();
        let back = Dataset::read_csv(f.path(), "y").unwrap();
        assert_eq!(back.y(), d.y());
        for r in 0..2 {
            for c in 0..2 {
                let (a, b) = (d.value(r, c), back.value(r, c));
                assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
            }
        }
    }

    #[test]
    fn duplicate_column_names_rejected() {
        let names = vec!["a".to_string(), "a".to_string()];
        let res = Dataset::from_parts(names, vec![1.0, 2.0], "y".into(), vec![0.0]);
        assert!(res.is_err());
    }
}
