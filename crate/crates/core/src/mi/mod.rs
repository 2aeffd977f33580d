//! Association measures between one outcome and one feature.
//!
//! All mutual-information estimates are in nats. Every estimator returns an
//! [`MiEstimate`] holding the raw value and its clamp at zero; rankings use
//! the clamped value.

mod binning;
mod discrete;
mod fftkde;
mod knn;
mod pearson;

use serde::{Deserialize, Serialize};

pub use binning::{birge_rozenholc_penalty, mi_binning, select_bin_count};
pub use discrete::{mi_discrete, ContingencyTable};
pub use fftkde::{mi_fftkde_bc, mi_fftkde_cc, FftKdeParams, MarginalMode};
pub use knn::{mi_knn_bc, mi_knn_cc, NeighborQuery};
pub use pearson::pearson_abs;

pub(crate) use binning::{mi_binning_with, OutcomeBins};
pub(crate) use fftkde::{mi_fftkde_bc_with, mi_fftkde_cc_with};

use crate::error::{HdmiError, Result};

/// Cells or grid nodes with density at or below this are skipped in
/// `f ln f` sums, following `0 ln 0 = 0`.
pub const DENSITY_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Fftkde,
    Binning,
    Knn,
    Pearson,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Fftkde, Method::Binning, Method::Knn, Method::Pearson];

    pub fn name(self) -> &'static str {
        match self {
            Method::Fftkde => "fftkde",
            Method::Binning => "binning",
            Method::Knn => "knn",
            Method::Pearson => "pearson",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = HdmiError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| HdmiError::invalid(format!("unknown method '{s}' (expected fftkde, binning, knn or pearson)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeKind {
    #[default]
    Continuous,
    Binary,
}

/// Borrowed outcome vector of either kind. Binary classes are coded 0/1.
#[derive(Clone, Copy, Debug)]
pub enum OutcomeRef<'a> {
    Continuous(&'a [f64]),
    Binary(&'a [u8]),
}

impl OutcomeRef<'_> {
    pub fn kind(&self) -> OutcomeKind {
        match self {
            OutcomeRef::Continuous(_) => OutcomeKind::Continuous,
            OutcomeRef::Binary(_) => OutcomeKind::Binary,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            OutcomeRef::Continuous(v) => v.len(),
            OutcomeRef::Binary(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One association score. For [`Method::Pearson`] the value is an absolute
/// correlation rather than nats.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    pub raw: f64,
    pub clamped: f64,
    pub method: Method,
    pub outcome_kind: OutcomeKind,
}

impl MiEstimate {
    pub fn new(raw: f64, method: Method, outcome_kind: OutcomeKind) -> Result<Self> {
        if !raw.is_finite() {
            return Err(HdmiError::Numeric(format!("{method} estimate is not finite ({raw})")));
        }
        Ok(MiEstimate { raw, clamped: raw.max(0.0), method, outcome_kind })
    }
}

pub(crate) fn check_pair(y_len: usize, x: &[f64]) -> Result<()> {
    if y_len != x.len() {
        return Err(HdmiError::invalid(format!("paired samples differ in length ({y_len} vs {})", x.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(HdmiError::invalid("feature contains non-finite values"));
    }
    Ok(())
}

pub(crate) fn check_classes(y: &[u8]) -> Result<[usize; 2]> {
    let mut counts = [0usize; 2];
    for &c in y {
        match c {
            0 | 1 => counts[c as usize] += 1,
            other => return Err(HdmiError::invalid(format!("binary outcome holds class {other}; expected 0 or 1"))),
        }
    }
    if counts.contains(&0) {
        return Err(HdmiError::degenerate("binary outcome needs both classes present"));
    }
    Ok(counts)
}
