mod common;

use std::alloc::{GlobalAlloc, Layout, System};
use std::cell::Cell;
use std::fs;

use hdmi_core::io::{convert_to_binary, open_binary, read_csv, read_header, write_binary, Backing, CsvOptions, MAGIC};
use hdmi_core::{open_dataset, DatasetHandle, HdmiError};
use proptest::prelude::*;
use rand::Rng;
use tempfile::TempDir;

/// Tracks live heap bytes allocated by the current thread, so parallel tests
/// do not disturb each other's accounting.
struct ThreadCounting;

thread_local! {
    static LIVE: Cell<isize> = const { Cell::new(0) };
    static PEAK: Cell<isize> = const { Cell::new(0) };
}

fn bump(delta: isize) {
    let _ = LIVE.try_with(|l| {
        let v = l.get() + delta;
        l.set(v);
        let _ = PEAK.try_with(|p| p.set(p.get().max(v)));
    });
}

unsafe impl GlobalAlloc for ThreadCounting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        bump(layout.size() as isize);
        System.alloc(layout)
    }
    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        bump(-(layout.size() as isize));
        System.dealloc(ptr, layout)
    }
    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        bump(new_size as isize - layout.size() as isize);
        System.realloc(ptr, layout, new_size)
    }
}

#[global_allocator]
static ALLOC: ThreadCounting = ThreadCounting;

/// Resets the peak to the current level and returns the baseline.
fn start_window() -> isize {
    let live = LIVE.with(Cell::get);
    PEAK.with(|p| p.set(live));
    live
}

fn peak_growth(base: isize) -> isize {
    PEAK.with(Cell::get) - base
}

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()))
}

fn write_csv(dir: &TempDir, names: &[String], columns: &[Vec<f64>]) -> std::path::PathBuf {
    let mut s = names.join(",");
    s.push('\n');
    for i in 0..columns[0].len() {
        let row: Vec<String> =
            columns.iter().map(|c| if c[i].is_nan() { "NA".to_string() } else { format!("{}", c[i]) }).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    let p = dir.path().join("m.csv");
    fs::write(&p, s).unwrap();
    p
}

#[test]
fn two_by_two_round_trip() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("a.csv");
    fs::write(&csv, "a,b\n1,2\n3,4\n").unwrap();
    let bin = dir.path().join("a.hdmi");
    let header = convert_to_binary(&csv, &bin, &CsvOptions::default()).unwrap();
    assert_eq!((header.rows, header.cols), (2, 2));
    assert_eq!(header, read_header(&bin).unwrap());
    let d = open_binary(&bin).unwrap();
    assert_eq!(d.backing(), Backing::FileMapped);
    assert_eq!(d.column_names(), ["a", "b"]);
    assert_eq!(d.column(0).unwrap(), vec![1.0, 3.0]);
    assert_eq!(d.column(1).unwrap(), vec![2.0, 4.0]);
}

#[test]
fn layout_is_little_endian_column_major() {
    let dir = TempDir::new().unwrap();
    let d = DatasetHandle::from_columns(vec!["x".into(), "yy".into()], vec![vec![1.0, 2.0], vec![3.0, f64::NAN]])
        .unwrap();
    let path = dir.path().join("m.hdmi");
    write_binary(&d, &path).unwrap();
    let bytes = fs::read(&path).unwrap();
    assert_eq!(bytes[..4], MAGIC);
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
    assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 2);
    assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 2);
    assert_eq!(u64::from_le_bytes(bytes[24..32].try_into().unwrap()), 4);
    assert_eq!(&bytes[32..36], b"x\nyy");
    let payload: Vec<f64> =
        bytes[36..].chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    assert_eq!(payload[..3], [1.0, 2.0, 3.0]);
    assert!(payload[3].is_nan());
}

#[test]
fn corrupt_files_are_rejected() {
    let dir = TempDir::new().unwrap();
    let d = DatasetHandle::from_columns(vec!["a".into()], vec![vec![1.0, 2.0, 3.0]]).unwrap();
    let path = dir.path().join("m.hdmi");
    write_binary(&d, &path).unwrap();
    let good = fs::read(&path).unwrap();

    let cut = dir.path().join("cut.hdmi");
    fs::write(&cut, &good[..good.len() - 1]).unwrap();
    assert!(matches!(open_binary(&cut), Err(HdmiError::Format { .. })));

    let mut magic = good.clone();
    magic[0] = b'X';
    fs::write(&cut, &magic).unwrap();
    assert!(matches!(open_binary(&cut), Err(HdmiError::Format { .. })));

    let mut version = good.clone();
    version[4] = 2;
    fs::write(&cut, &version).unwrap();
    assert!(matches!(open_binary(&cut), Err(HdmiError::Format { .. })));

    let mut long = good.clone();
    long.push(0);
    fs::write(&cut, &long).unwrap();
    assert!(open_binary(&cut).is_err());
}

#[test]
fn open_dataset_sniffs_the_format() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("a.csv");
    fs::write(&csv, "a,b\n1,2\n3,4\n").unwrap();
    let bin = dir.path().join("a.bin");
    convert_to_binary(&csv, &bin, &CsvOptions::default()).unwrap();
    let opts = CsvOptions::default();
    assert_eq!(open_dataset(&csv, &opts).unwrap().backing(), Backing::InMemory);
    assert_eq!(open_dataset(&bin, &opts).unwrap().backing(), Backing::FileMapped);
}

#[test]
fn mapped_column_read_stays_within_one_column() {
    let (rows, cols) = (1000usize, 5000usize);
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("big.hdmi");
    {
        let mut r = common::rng(77);
        let values: Vec<f64> = (0..rows * cols).map(|_| r.random::<f64>()).collect();
        let names = (0..cols).map(|j| format!("c{j}")).collect();
        let d = DatasetHandle::from_column_major(rows, names, values).unwrap();
        write_binary(&d, &path).unwrap();
    }
    let payload = (rows * cols * 8) as isize;

    let base = start_window();
    let d = open_binary(&path).unwrap();
    let open_growth = peak_growth(base);
    // header parsing owns the name table and nothing else of size
    assert!(open_growth < 1 << 20, "open grew the heap by {open_growth} bytes");
    assert!(open_growth < payload / 40);

    let base = start_window();
    let col = d.column(cols - 1).unwrap();
    let read_growth = peak_growth(base);
    let one_column = (rows * 8) as isize;
    assert!(read_growth <= one_column + 1024, "column read grew the heap by {read_growth} bytes");
    assert_eq!(col.len(), rows);
    assert!(col.iter().all(|v| (0.0..1.0).contains(v)));
}

fn matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
    let cell = prop_oneof![
        8 => any::<f64>().prop_filter("finite", |v| v.is_finite()),
        1 => Just(f64::NAN),
    ];
    (1usize..8, 1usize..6).prop_flat_map(move |(r, c)| prop::collection::vec(prop::collection::vec(cell.clone(), r), c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn csv_binary_round_trip_is_bitwise(columns in matrix()) {
        let dir = TempDir::new().unwrap();
        let names: Vec<String> = (0..columns.len()).map(|j| format!("v{j}")).collect();
        let csv = write_csv(&dir, &names, &columns);
        let direct = read_csv(&csv, &CsvOptions::default()).unwrap();
        let bin = dir.path().join("m.hdmi");
        convert_to_binary(&csv, &bin, &CsvOptions::default()).unwrap();
        let mapped = open_binary(&bin).unwrap();
        prop_assert_eq!(direct.column_names(), mapped.column_names());
        for (j, expect) in columns.iter().enumerate() {
            let a = direct.column(j).unwrap();
            let b = mapped.column(j).unwrap();
            prop_assert!(same_bits(&a, &b));
            prop_assert!(same_bits(&a, expect));
        }
    }
}
