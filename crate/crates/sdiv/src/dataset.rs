//! Delimited numeric text ingestion.
//!
//! One sample per row, columns separated by commas and/or whitespace. A
//! non-numeric first line is treated as a header and skipped. Every data row
//! must have the same column count and every value must be finite.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use ndarray::Array2;

use crate::measures::EmpiricalMeasure;
use crate::{Error, Result};

/// Parses rows of finite numbers from text.
///
/// Blank lines are skipped. Returns an error naming the first offending line
/// on a parse failure, a non-finite value, or a ragged row.
pub fn parse_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    let mut saw_content = false;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .collect();
        if tokens.is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            tokens.iter().map(|t| t.parse::<f64>()).collect();
        let first_content_line = !saw_content;
        saw_content = true;
        let values = match parsed {
            Ok(values) => values,
            Err(_) if first_content_line => continue, // header row
            Err(_) => {
                return Err(Error::Dataset {
                    line: lineno,
                    message: "expected a number".into(),
                })
            }
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Dataset { line: lineno, message: "non-finite value".into() });
        }
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(Error::Dataset {
                    line: lineno,
                    message: format!("expected {w} columns, got {}", values.len()),
                })
            }
            _ => {}
        }
        rows.push(values);
    }
    Ok(rows)
}

/// Parses text into an `n × d` matrix; errors if no data rows remain.
pub fn parse_matrix(text: &str) -> Result<Array2<f64>> {
    let rows = parse_rows(text)?;
    if rows.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let d = rows[0].len();
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((rows.len(), d), flat)
        .map_err(|e| Error::InvalidConfig(e.to_string()))
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    let mut text = String::new();
    BufReader::new(File::open(path)?).read_to_string(&mut text)?;
    parse_matrix(&text)
}

/// Reads a dataset as a uniform empirical measure.
pub fn read_measure(path: &Path) -> Result<EmpiricalMeasure> {
    EmpiricalMeasure::uniform(read_matrix(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_commas_and_whitespace() {
        let rows = parse_rows("1,2,3\n4 5 6\n7,\t8, 9\n").unwrap();
        assert_eq!(rows, vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 9.0]]);
    }

    #[test]
    fn skips_header_and_blank_lines() {
        let rows = parse_rows("x,y\n\n1,2\n\n3,4\n").unwrap();
        assert_eq!(rows, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    }

    #[test]
    fn numeric_first_line_is_data() {
        let rows = parse_rows("1.5,2.5\n3,4\n").unwrap();
        assert_eq!(rows.len(), 2);
    }

    #[test]
    fn rejects_ragged_rows() {
        let err = parse_rows("1,2\n3,4,5\n").unwrap_err();
        assert!(matches!(err, Error::Dataset { line: 2, .. }));
    }

    #[test]
    fn rejects_non_numeric_data_line() {
        let err = parse_rows("1,2\nfoo,4\n").unwrap_err();
        assert!(matches!(err, Error::Dataset { line: 2, .. }));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(parse_rows("1,NaN\n").is_err());
        assert!(parse_rows("inf,2\n").is_err());
    }

    #[test]
    fn empty_input_is_empty_matrix_error() {
        assert!(parse_matrix("").is_err());
        assert!(parse_matrix("header only\n").is_err());
    }
}
