use std::fs::File;
use std::path::Path;

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Reads a comma-separated matrix, one observation per row.
///
/// A single leading header row is skipped when it does not parse as numbers.
/// Rows are numbered from 1 as they appear in the file, header included.
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<DataMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut values = Vec::new();
    let mut width: Option<usize> = None;
    let mut rows = 0usize;
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| Error::Csv(format!("row {line}: {e}")))?;
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRow {
                row: line,
                expected,
                found: record.len(),
            });
        }
        let parsed: std::result::Result<Vec<f64>, usize> = record
            .iter()
            .enumerate()
            .map(|(c, cell)| cell.parse::<f64>().map_err(|_| c))
            .collect();
        match parsed {
            Ok(row) => {
                if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { row: line, col: c + 1 });
                }
                values.extend(row);
                rows += 1;
            }
            Err(_) if line == 1 => {}
            Err(c) => {
                return Err(Error::NonNumeric {
                    row: line,
                    col: c + 1,
                    cell: record[c].to_string(),
                })
            }
        }
    }
    let p = width.unwrap_or(0);
    if rows == 0 || p == 0 {
        return Err(Error::InvalidDimensions(format!("{} contains no data rows", path.display())));
    }
    DataMatrix::new(rows, p, values)
}

/// Rejects data too short for any admissible split (`n <= 2p + 4`).
pub fn ensure_detectable(data: &DataMatrix) -> Result<()> {
    let bound = 2 * data.p() + 4;
    if data.n() <= bound {
        return Err(Error::TooFewRows {
            n: data.n(),
            p: data.p(),
            bound,
        });
    }
    Ok(())
}
