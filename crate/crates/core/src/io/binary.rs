//! Binary matrix container.
//!
//! Layout, all integers little-endian:
//!
//! | bytes      | field                                             |
//! |------------|---------------------------------------------------|
//! | 4          | magic `HDMI`                                      |
//! | 4          | version, `u32` (= 1)                              |
//! | 8          | rows, `u64`                                       |
//! | 8          | cols, `u64`                                       |
//! | 8          | name-table length in bytes, `u64`                 |
//! | name table | UTF-8 column names joined by `\n`                 |
//! | payload    | `rows * cols` IEEE-754 `f64`, column-major; NaN = missing |

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use memmap2::Mmap;
use serde::Serialize;

use crate::error::{HdmiError, Result};
use crate::io::{read_csv, CsvOptions, DatasetHandle};

pub const MAGIC: [u8; 4] = *b"HDMI";
pub const VERSION: u32 = 1;
const FIXED_HEADER: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BinaryMatrixHeader {
    pub version: u32,
    pub rows: u64,
    pub cols: u64,
    pub names: Vec<String>,
    /// Byte offset of the first payload value.
    pub payload_offset: u64,
}

fn format_err(path: &Path, msg: impl Into<String>) -> HdmiError {
    HdmiError::Format { path: PathBuf::from(path), msg: msg.into() }
}

fn u64_at(bytes: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
}

/// Parses and validates the header against the total file length.
fn parse_header(bytes: &[u8], path: &Path) -> Result<BinaryMatrixHeader> {
    if bytes.len() < FIXED_HEADER {
        return Err(format_err(path, format!("file is {} bytes, shorter than the header", bytes.len())));
    }
    if bytes[..4] != MAGIC {
        return Err(format_err(path, "bad magic; not an HDMI matrix"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(format_err(path, format!("unsupported version {version}")));
    }
    let rows = u64_at(bytes, 8);
    let cols = u64_at(bytes, 16);
    let name_len = u64_at(bytes, 24);
    if rows == 0 || cols == 0 {
        return Err(format_err(path, format!("empty matrix {rows}x{cols}")));
    }
    let names_end = (FIXED_HEADER as u64)
        .checked_add(name_len)
        .filter(|&e| e <= bytes.len() as u64)
        .ok_or_else(|| format_err(path, "name table runs past end of file"))? as usize;
    let table = std::str::from_utf8(&bytes[FIXED_HEADER..names_end])
        .map_err(|_| format_err(path, "name table is not valid UTF-8"))?;
    let names: Vec<String> = table.split('\n').map(str::to_owned).collect();
    if names.len() as u64 != cols {
        return Err(format_err(path, format!("name table lists {} names for {cols} columns", names.len())));
    }
    let payload = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| format_err(path, "payload size overflows"))?;
    let actual = (bytes.len() - names_end) as u64;
    if actual != payload {
        return Err(format_err(
            path,
            format!("payload is {actual} bytes, expected {payload} ({rows}x{cols} f64)"),
        ));
    }
    Ok(BinaryMatrixHeader { version, rows, cols, names, payload_offset: names_end as u64 })
}

pub fn read_header(path: impl AsRef<Path>) -> Result<BinaryMatrixHeader> {
    let path = path.as_ref();
    let file = File::open(path)?;
    // SAFETY: the mapping is read-only and the file is not modified while open.
    let map = unsafe { Mmap::map(&file)? };
    parse_header(&map, path)
}

/// Maps a binary matrix. Columns are decoded on demand; the payload is never
/// copied into private memory as a whole.
pub fn open_binary(path: impl AsRef<Path>) -> Result<DatasetHandle> {
    let path = path.as_ref();
    let file = File::open(path)?;
    // SAFETY: read-only mapping; callers must not truncate the file while the
    // handle is alive.
    let map = unsafe { Mmap::map(&file)? };
    let header = parse_header(&map, path)?;
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = header.names.iter().find(|n| !seen.insert(n.as_str())) {
        return Err(format_err(path, format!("duplicate column name '{dup}'")));
    }
    Ok(DatasetHandle::mapped(header.rows as usize, header.names, map, header.payload_offset as usize))
}

pub fn write_binary(dataset: &DatasetHandle, path: impl AsRef<Path>) -> Result<BinaryMatrixHeader> {
    let names = dataset.column_names();
    if let Some(bad) = names.iter().find(|n| n.contains('\n')) {
        return Err(HdmiError::invalid(format!("column name {bad:?} contains a newline")));
    }
    let table = names.join("\n");
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    out.write_all(&MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(dataset.rows() as u64).to_le_bytes())?;
    out.write_all(&(dataset.cols() as u64).to_le_bytes())?;
    out.write_all(&(table.len() as u64).to_le_bytes())?;
    out.write_all(table.as_bytes())?;
    let mut col = Vec::with_capacity(dataset.rows());
    for j in 0..dataset.cols() {
        dataset.read_column_into(j, &mut col)?;
        for v in &col {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(BinaryMatrixHeader {
        version: VERSION,
        rows: dataset.rows() as u64,
        cols: dataset.cols() as u64,
        names: names.to_vec(),
        payload_offset: (FIXED_HEADER + table.len()) as u64,
    })
}

pub fn convert_to_binary(
    csv_path: impl AsRef<Path>,
    out_path: impl AsRef<Path>,
    options: &CsvOptions,
) -> Result<BinaryMatrixHeader> {
    let data = read_csv(csv_path, options)?;
    write_binary(&data, out_path)
}
