//! Column-addressable datasets backed either by memory or by a mapped file.
//!
//! Missing values are NaN. Columns are copied out one at a time into a
//! caller-owned buffer, so a worker never holds more than the column it is
//! processing.

mod binary;
mod csv;

use std::collections::HashSet;

use memmap2::Mmap;

pub use self::binary::{convert_to_binary, open_binary, read_header, write_binary, BinaryMatrixHeader, MAGIC, VERSION};
pub use self::csv::{read_csv, read_csv_from, CsvOptions};

use crate::error::{HdmiError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backing {
    InMemory,
    FileMapped,
}

enum Store {
    Memory(Vec<f64>),
    Mapped { map: Mmap, payload_offset: usize },
}

/// Immutable numeric matrix, rows are observations and columns features.
pub struct DatasetHandle {
    rows: usize,
    cols: usize,
    names: Vec<String>,
    store: Store,
}

impl std::fmt::Debug for DatasetHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DatasetHandle")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("backing", &self.backing())
            .finish()
    }
}

/// Opens a binary matrix (recognised by its magic bytes) or parses a CSV.
pub fn open_dataset(path: impl AsRef<std::path::Path>, csv_options: &CsvOptions) -> Result<DatasetHandle> {
    use std::io::Read;
    let path = path.as_ref();
    let mut head = [0u8; 4];
    let mut f = std::fs::File::open(path)?;
    let n = f.read(&mut head)?;
    if n == 4 && head == MAGIC {
        open_binary(path)
    } else {
        read_csv(path, csv_options)
    }
}

fn check_names(names: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(names.len());
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(HdmiError::invalid(format!("duplicate column name '{n}'")));
        }
    }
    Ok(())
}

impl DatasetHandle {
    /// In-memory dataset from column-major values.
    pub fn from_column_major(rows: usize, names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let cols = names.len();
        if rows == 0 || cols == 0 {
            return Err(HdmiError::invalid(format!("dataset must be non-empty, got {rows}x{cols}")));
        }
        if values.len() != rows * cols {
            return Err(HdmiError::invalid(format!(
                "expected {} values for {rows}x{cols}, got {}",
                rows * cols,
                values.len()
            )));
        }
        check_names(&names)?;
        Ok(DatasetHandle { rows, cols, names, store: Store::Memory(values) })
    }

    pub fn from_columns(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if names.len() != columns.len() {
            return Err(HdmiError::invalid("column names and columns differ in count"));
        }
        if columns.iter().any(|c| c.len() != rows) {
            return Err(HdmiError::invalid("columns differ in length"));
        }
        DatasetHandle::from_column_major(rows, names, columns.concat())
    }

    pub(crate) fn mapped(rows: usize, names: Vec<String>, map: Mmap, payload_offset: usize) -> Self {
        DatasetHandle { rows, cols: names.len(), names, store: Store::Mapped { map, payload_offset } }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column_names(&self) -> &[String] {
        &self.names
    }

    pub fn backing(&self) -> Backing {
        match self.store {
            Store::Memory(_) => Backing::InMemory,
            Store::Mapped { .. } => Backing::FileMapped,
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Resolves a column given by name, or by zero-based index when no column
    /// carries that name.
    pub fn resolve_column(&self, key: &str) -> Result<usize> {
        if let Some(i) = self.column_index(key) {
            return Ok(i);
        }
        match key.parse::<usize>() {
            Ok(i) if i < self.cols => Ok(i),
            _ => Err(HdmiError::invalid(format!("no column named '{key}'"))),
        }
    }

    /// Copies column `j` into `buf`, replacing its contents.
    pub fn read_column_into(&self, j: usize, buf: &mut Vec<f64>) -> Result<()> {
        if j >= self.cols {
            return Err(HdmiError::invalid(format!("column {j} out of range ({} columns)", self.cols)));
        }
        buf.clear();
        match &self.store {
            Store::Memory(v) => buf.extend_from_slice(&v[j * self.rows..(j + 1) * self.rows]),
            Store::Mapped { map, payload_offset } => {
                let start = payload_offset + j * self.rows * 8;
                let bytes = &map[start..start + self.rows * 8];
                buf.extend(bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk"))));
            }
        }
        Ok(())
    }

    pub fn column(&self, j: usize) -> Result<Vec<f64>> {
        let mut buf = Vec::with_capacity(self.rows);
        self.read_column_into(j, &mut buf)?;
        Ok(buf)
    }
}
