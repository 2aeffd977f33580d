//! Histogram mutual information with the penalized-likelihood bin count.

use crate::error::{HdmiError, Result};
use crate::mi::{check_classes, check_pair, ContingencyTable, MiEstimate, Method, OutcomeRef};
use crate::stats;

/// `pen(D) = D - 1 + (ln D)^2.5`
pub fn birge_rozenholc_penalty(d: usize) -> f64 {
    (d as f64 - 1.0) + (d as f64).ln().powf(2.5)
}

/// Position of every value in `[0, 1]` relative to the data range.
fn unit_positions(x: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let width = hi - lo;
    x.iter().map(|v| (v - lo) / width).collect()
}

fn bin_of(u: f64, d: usize) -> usize {
    ((u * d as f64) as usize).min(d - 1)
}

/// Equal-width bin labels on `[min, max]`; the maximum lands in the last bin.
pub(crate) fn bin_indices(x: &[f64], d: usize) -> Vec<usize> {
    let (lo, hi) = stats::min_max(x);
    if !(hi > lo) || d <= 1 {
        return vec![0; x.len()];
    }
    unit_positions(x, lo, hi).into_iter().map(|u| bin_of(u, d)).collect()
}

/// Number of equal-width bins maximizing `L(D) - pen(D)` with
/// `L(D) = sum_j n_j ln(D n_j / n)`, searched over `1..=ceil(n / ln n)`.
/// Ties go to the smaller count; constant data gives one bin.
pub fn select_bin_count(x: &[f64]) -> Result<usize> {
    if x.len() < 4 {
        return Err(HdmiError::invalid(format!("bin selection needs at least 4 values, got {}", x.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(HdmiError::invalid("bin selection needs finite values"));
    }
    let (lo, hi) = stats::min_max(x);
    if !(hi > lo) {
        return Ok(1);
    }
    let n = x.len() as f64;
    let max_bins = (n / n.ln()).ceil() as usize;
    let u = unit_positions(x, lo, hi);
    let mut counts = vec![0u64; max_bins];
    let (mut best_d, mut best) = (1, 0.0);
    for d in 2..=max_bins {
        counts[..d].iter_mut().for_each(|c| *c = 0);
        for &ui in &u {
            counts[bin_of(ui, d)] += 1;
        }
        let loglik: f64 = counts[..d]
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| c as f64 * (d as f64 * c as f64 / n).ln())
            .sum();
        let score = loglik - birge_rozenholc_penalty(d);
        if score > best {
            best = score;
            best_d = d;
        }
    }
    Ok(best_d)
}

/// Outcome labels computed once and reused across features.
#[derive(Clone, Debug)]
pub(crate) struct OutcomeBins {
    labels: Vec<usize>,
    levels: usize,
}

impl OutcomeBins {
    pub(crate) fn new(y: OutcomeRef<'_>, bins: Option<usize>) -> Result<Self> {
        match y {
            OutcomeRef::Binary(classes) => {
                check_classes(classes)?;
                Ok(OutcomeBins { labels: classes.iter().map(|&c| c as usize).collect(), levels: 2 })
            }
            OutcomeRef::Continuous(values) => {
                let d = match bins {
                    Some(d) => d,
                    None => select_bin_count(values)?,
                };
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(HdmiError::invalid("outcome contains non-finite values"));
                }
                Ok(OutcomeBins { labels: bin_indices(values, d), levels: d })
            }
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.labels.len()
    }
}

pub(crate) fn mi_binning_with(
    y: &OutcomeBins,
    kind: crate::mi::OutcomeKind,
    x: &[f64],
    bins: Option<usize>,
) -> Result<MiEstimate> {
    check_pair(y.len(), x)?;
    let (lo, hi) = stats::min_max(x);
    if !(hi > lo) {
        return Err(HdmiError::degenerate("feature is constant"));
    }
    let d = match bins {
        Some(d) => d,
        None => select_bin_count(x)?,
    };
    let table = ContingencyTable::tabulate(&y.labels, y.levels, &bin_indices(x, d), d)?;
    MiEstimate::new(table.plug_in(), Method::Binning, kind)
}

/// Plug-in MI of the cross-tabulated bins. `bins` overrides the selected
/// count on both axes; a binary outcome uses its two classes directly.
pub fn mi_binning(y: OutcomeRef<'_>, x: &[f64], bins: Option<usize>) -> Result<MiEstimate> {
    if let Some(0) = bins {
        return Err(HdmiError::invalid("bin override must be positive"));
    }
    if let OutcomeRef::Continuous(v) = y {
        let (lo, hi) = stats::min_max(v);
        if !(hi > lo) {
            return Err(HdmiError::degenerate("outcome is constant"));
        }
    }
    let prepared = OutcomeBins::new(y, bins)?;
    mi_binning_with(&prepared, y.kind(), x, bins)
}
