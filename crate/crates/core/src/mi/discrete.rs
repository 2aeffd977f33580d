use crate::error::{HdmiError, Result};
use crate::mi::{MiEstimate, Method, OutcomeKind};

/// Two-way table of non-negative counts, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyTable {
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
    total: u64,
}

impl ContingencyTable {
    pub fn new(rows: usize, cols: usize, counts: Vec<u64>) -> Result<Self> {
        if rows == 0 || cols == 0 || counts.len() != rows * cols {
            return Err(HdmiError::invalid(format!(
                "table of {} counts does not match {rows}x{cols}",
                counts.len()
            )));
        }
        let total = counts.iter().sum();
        if total == 0 {
            return Err(HdmiError::degenerate("contingency table is all zero"));
        }
        Ok(ContingencyTable { rows, cols, counts, total })
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(HdmiError::invalid("ragged contingency table"));
        }
        ContingencyTable::new(rows.len(), cols, rows.concat())
    }

    /// Cross-tabulates two label vectors with `rows` and `cols` levels.
    pub(crate) fn tabulate(a: &[usize], rows: usize, b: &[usize], cols: usize) -> Result<Self> {
        let mut counts = vec![0u64; rows * cols];
        for (&i, &j) in a.iter().zip(b) {
            counts[i * cols + j] += 1;
        }
        ContingencyTable::new(rows, cols, counts)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, r: usize, c: usize) -> u64 {
        self.counts[r * self.cols + c]
    }

    pub(crate) fn plug_in(&self) -> f64 {
        let n = self.total as f64;
        let row_sums: Vec<u64> = self.counts.chunks(self.cols).map(|r| r.iter().sum()).collect();
        let mut col_sums = vec![0u64; self.cols];
        for row in self.counts.chunks(self.cols) {
            for (s, c) in col_sums.iter_mut().zip(row) {
                *s += c;
            }
        }
        let mut mi = 0.0;
        for r in 0..self.rows {
            for c in 0..self.cols {
                let cnt = self.count(r, c);
                if cnt == 0 {
                    continue;
                }
                let p = cnt as f64 / n;
                let pr = row_sums[r] as f64 / n;
                let pc = col_sums[c] as f64 / n;
                mi += p * (p / (pr * pc)).ln();
            }
        }
        mi
    }
}

/// Plug-in mutual information of the empirical joint distribution,
/// `sum p_ij ln(p_ij / (p_i p_j))` over non-empty cells. The estimate is
/// tagged as a binning estimate of a discrete outcome.
pub fn mi_discrete(table: &ContingencyTable) -> Result<MiEstimate> {
    MiEstimate::new(table.plug_in(), Method::Binning, OutcomeKind::Binary)
}
