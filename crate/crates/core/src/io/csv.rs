use std::fs::File;
use std::io::Read;
use std::path::Path;

use csv::{ErrorKind, ReaderBuilder, Trim};

use crate::error::{HdmiError, Result};
use crate::io::DatasetHandle;

#[derive(Clone, Debug)]
pub struct CsvOptions {
    pub delimiter: u8,
    /// Cell contents read as missing (NaN).
    pub na_tokens: Vec<String>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions { delimiter: b',', na_tokens: ["", "NA", "NaN", "nan", "N/A"].map(String::from).to_vec() }
    }
}

fn csv_error(e: csv::Error) -> HdmiError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        ErrorKind::UnequalLengths { expected_len, len, pos } => HdmiError::Parse {
            line: pos.map_or(line, |p| p.line()),
            msg: format!("row has {len} fields, header has {expected_len}"),
        },
        ErrorKind::Io(io) => HdmiError::Io(io),
        other => HdmiError::Parse { line, msg: format!("{other:?}") },
    }
}

pub fn read_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<DatasetHandle> {
    read_csv_from(File::open(path)?, options)
}

/// Parses a headed, all-numeric CSV into a column-major in-memory dataset.
pub fn read_csv_from<R: Read>(reader: R, options: &CsvOptions) -> Result<DatasetHandle> {
    let mut rdr = ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .flexible(false)
        .trim(Trim::All)
        .from_reader(reader);
    let names: Vec<String> = rdr.headers().map_err(csv_error)?.iter().map(str::to_owned).collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(HdmiError::Parse { line: 1, msg: "missing header row".into() });
    }
    if let Some(dup) = names.iter().enumerate().find(|(i, n)| names[..*i].contains(n)) {
        return Err(HdmiError::Parse { line: 1, msg: format!("duplicate column name '{}'", dup.1) });
    }

    let cols = names.len();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); cols];
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record).map_err(csv_error)? {
        let line = record.position().map_or(0, |p| p.line());
        for (j, cell) in record.iter().enumerate() {
            let v = if options.na_tokens.iter().any(|t| t == cell) {
                f64::NAN
            } else {
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => v,
                    _ => {
                        return Err(HdmiError::Parse {
                            line,
                            msg: format!("column '{}' holds non-numeric value '{cell}'", names[j]),
                        })
                    }
                }
            };
            columns[j].push(v);
        }
    }
    if columns[0].is_empty() {
        return Err(HdmiError::Parse { line: 2, msg: "no data rows".into() });
    }
    DatasetHandle::from_columns(names, columns)
}
