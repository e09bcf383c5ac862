use std::io::Read;

use super::DataTable;
use crate::error::{Error, Location, Result};

/// How to read a sensor-log CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvOptions {
    pub delimiter: u8,
    /// When false, columns are named `column_1`, `column_2`, ...
    pub has_header: bool,
    /// Drop malformed rows (ragged, non-numeric or non-finite) instead of
    /// rejecting the whole file.
    pub drop_bad_rows: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            delimiter: b',',
            has_header: true,
            drop_bad_rows: false,
        }
    }
}

/// A row removed under [`CsvOptions::drop_bad_rows`].
#[derive(Debug, Clone, PartialEq)]
pub struct DroppedRow {
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCsv {
    pub table: DataTable,
    pub dropped: Vec<DroppedRow>,
}

/// Parse a numeric CSV into a [`DataTable`].
pub fn parse_csv<R: Read>(source: R, options: CsvOptions) -> Result<ParsedCsv> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let mut records = reader.records();
    let first = match records.next() {
        None => return Err(Error::Empty("CSV input has no rows")),
        Some(first) => first.map_err(|e| csv_error(e, None))?,
    };
    let (names, pending_first): (Vec<String>, Option<csv::StringRecord>) = if options.has_header {
        (first.iter().map(str::to_owned).collect(), None)
    } else {
        ((1..=first.len()).map(|i| format!("column_{i}")).collect(), Some(first))
    };
    let dim = names.len();
    if dim == 0 || (dim == 1 && names[0].is_empty() && options.has_header) {
        return Err(Error::Empty("CSV header has no columns"));
    }

    let mut values = Vec::new();
    let mut dropped = Vec::new();
    let mut row_no = 0usize;
    let all = pending_first
        .into_iter()
        .map(Ok)
        .chain(records.by_ref());
    for record in all {
        row_no += 1;
        let record = record.map_err(|e| csv_error(e, Some(row_no)))?;
        match parse_record(&record, dim, row_no) {
            Ok(row) => values.extend(row),
            Err(err) if options.drop_bad_rows => {
                log::warn!("dropping {err}");
                dropped.push(DroppedRow {
                    row: row_no,
                    reason: err.to_string(),
                });
            }
            Err(err) => return Err(err),
        }
    }
    let table = DataTable::new(&names, values)?;
    Ok(ParsedCsv { table, dropped })
}

fn parse_record(record: &csv::StringRecord, dim: usize, row: usize) -> Result<Vec<f64>> {
    if record.len() != dim {
        return Err(Error::Parse {
            location: Location {
                row: Some(row),
                column: None,
            },
            reason: format!("expected {dim} fields, found {}", record.len()),
        });
    }
    record
        .iter()
        .enumerate()
        .map(|(j, cell)| {
            let location = Location {
                row: Some(row),
                column: Some(j + 1),
            };
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(v) => Err(Error::Parse {
                    location,
                    reason: format!("non-finite value {v}"),
                }),
                Err(_) => Err(Error::Parse {
                    location,
                    reason: format!("not a number: {cell:?}"),
                }),
            }
        })
        .collect()
}

fn csv_error(err: csv::Error, row: Option<usize>) -> Error {
    Error::Parse {
        location: Location { row, column: None },
        reason: err.to_string(),
    }
}
