//! Nearest-neighbour mutual information under the max-norm.
//!
//! Ties are broken by a deterministic jitter of relative size 1e-10 keyed on
//! each observation's values, so the estimate does not depend on row order.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

use crate::error::{HdmiError, Result};
use crate::mi::{check_classes, check_pair, MiEstimate, Method, OutcomeKind};
use crate::rng::{centered_unit, mix64};
use crate::stats;

const JITTER_SCALE: f64 = 1e-10;

/// Neighbour count and jitter seed. Distances are always max-norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborQuery {
    pub k: usize,
    pub jitter_seed: u64,
}

impl Default for NeighborQuery {
    fn default() -> Self {
        NeighborQuery { k: 3, jitter_seed: 0 }
    }
}

impl NeighborQuery {
    pub fn new(k: usize) -> Self {
        NeighborQuery { k, ..Self::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.jitter_seed = seed;
        self
    }
}

fn jitter_hash(seed: u64, own: f64, other: u64) -> u64 {
    mix64(seed ^ mix64(own.to_bits() ^ mix64(other)))
}

/// Jittered copy of `axis`; each entry's offset depends only on the seed and
/// the values of its own observation.
fn jittered(axis: &[f64], partner: impl Fn(usize) -> u64, seed: u64) -> Vec<f64> {
    let (_, sd) = stats::mean_sd(axis);
    let scale = JITTER_SCALE * sd;
    axis.iter()
        .enumerate()
        .map(|(i, &v)| v + scale * centered_unit(jitter_hash(seed, v, partner(i))))
        .collect()
}

fn require_spread(v: &[f64], what: &str) -> Result<()> {
    let (lo, hi) = stats::min_max(v);
    if !(hi > lo) {
        return Err(HdmiError::degenerate(format!("{what} needs at least two distinct values")));
    }
    Ok(())
}

/// Number of entries of `sorted` strictly inside `(c - r, c + r)`.
fn count_open(sorted: &[f64], c: f64, r: f64) -> usize {
    let lo = sorted.partition_point(|&v| v <= c - r);
    let hi = sorted.partition_point(|&v| v < c + r);
    hi.saturating_sub(lo)
}

/// Keeps the `k` smallest distances seen so far, ascending.
struct KBest {
    k: usize,
    d: Vec<f64>,
}

impl KBest {
    fn new(k: usize) -> Self {
        KBest { k, d: Vec::with_capacity(k + 1) }
    }

    fn reset(&mut self) {
        self.d.clear();
    }

    fn full(&self) -> bool {
        self.d.len() == self.k
    }

    fn worst(&self) -> f64 {
        if self.full() {
            self.d[self.k - 1]
        } else {
            f64::INFINITY
        }
    }

    fn push(&mut self, v: f64) {
        if v >= self.worst() {
            return;
        }
        let at = self.d.partition_point(|&x| x <= v);
        self.d.insert(at, v);
        self.d.truncate(self.k);
    }
}

/// Kraskov-type estimator (first algorithm):
/// `psi(k) + psi(n) - mean[psi(n_x + 1) + psi(n_y + 1)]`, where `n_x`, `n_y`
/// count other points strictly closer on each axis than the k-th joint
/// neighbour.
pub fn mi_knn_cc(y: &[f64], x: &[f64], q: &NeighborQuery) -> Result<MiEstimate> {
    check_pair(y.len(), x)?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(HdmiError::invalid("outcome contains non-finite values"));
    }
    let n = y.len();
    let k = q.k;
    if k == 0 || k >= n {
        return Err(HdmiError::invalid(format!("neighbour count k = {k} must satisfy 1 <= k < n = {n}")));
    }
    let yj = jittered(y, |i| x[i].to_bits(), q.jitter_seed);
    let xj = jittered(x, |i| y[i].to_bits(), q.jitter_seed);
    require_spread(&yj, "outcome")?;
    require_spread(&xj, "feature")?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xj[a].total_cmp(&xj[b]).then(yj[a].total_cmp(&yj[b])));
    let xs: Vec<f64> = order.iter().map(|&i| xj[i]).collect();
    let ys_by_x: Vec<f64> = order.iter().map(|&i| yj[i]).collect();
    let ys_sorted = stats::sorted_copy(&yj);

    let mut best = KBest::new(k);
    let mut acc = 0.0;
    for p in 0..n {
        best.reset();
        let (xp, yp) = (xs[p], ys_by_x[p]);
        let (mut l, mut r) = (p, p + 1);
        loop {
            let dl = if l > 0 { xp - xs[l - 1] } else { f64::INFINITY };
            let dr = if r < n { xs[r] - xp } else { f64::INFINITY };
            let step = dl.min(dr);
            if step == f64::INFINITY || (best.full() && step >= best.worst()) {
                break;
            }
            let j = if dl <= dr {
                l -= 1;
                l
            } else {
                r += 1;
                r - 1
            };
            best.push(step.max((ys_by_x[j] - yp).abs()));
        }
        let eps = best.worst();
        let nx = count_open(&xs, xp, eps).saturating_sub(1);
        let ny = count_open(&ys_sorted, yp, eps).saturating_sub(1);
        acc += digamma(nx as f64 + 1.0) + digamma(ny as f64 + 1.0);
    }
    let raw = digamma(k as f64) + digamma(n as f64) - acc / n as f64;
    MiEstimate::new(raw, Method::Knn, OutcomeKind::Continuous)
}

/// Mixed discrete-continuous estimator:
/// `psi(n) - mean psi(n_c) + psi(k) - mean psi(m_i)`. The radius is the
/// distance to the k-th neighbour within the point's own class; `m_i` counts
/// all points strictly inside that radius, the point itself included.
pub fn mi_knn_bc(y: &[u8], x: &[f64], q: &NeighborQuery) -> Result<MiEstimate> {
    check_pair(y.len(), x)?;
    let counts = check_classes(y)?;
    let k = q.k;
    if k == 0 {
        return Err(HdmiError::invalid("neighbour count must be positive"));
    }
    if let Some(c) = counts.iter().position(|&c| c <= k) {
        return Err(HdmiError::degenerate(format!(
            "class {c} has {} members; needs more than k = {k}",
            counts[c]
        )));
    }
    let n = y.len();
    let xj = jittered(x, |i| y[i] as u64, q.jitter_seed);
    require_spread(&xj, "feature")?;
    let all_sorted = stats::sorted_copy(&xj);

    let mut acc_m = 0.0;
    let mut acc_class = 0.0;
    for class in 0u8..2 {
        let members: Vec<f64> =
            stats::sorted_copy(&y.iter().zip(&xj).filter(|(c, _)| **c == class).map(|(_, v)| *v).collect::<Vec<_>>());
        let nc = members.len();
        for p in 0..nc {
            let (mut l, mut r) = (p, p + 1);
            let mut radius = 0.0;
            for _ in 0..k {
                let dl = if l > 0 { members[p] - members[l - 1] } else { f64::INFINITY };
                let dr = if r < nc { members[r] - members[p] } else { f64::INFINITY };
                if dl <= dr {
                    l -= 1;
                    radius = dl;
                } else {
                    r += 1;
                    radius = dr;
                }
            }
            let m = count_open(&all_sorted, members[p], radius).max(1);
            acc_m += digamma(m as f64);
        }
        acc_class += nc as f64 * digamma(nc as f64);
    }
    let nf = n as f64;
    let raw = digamma(nf) - acc_class / nf + digamma(k as f64) - acc_m / nf;
    MiEstimate::new(raw, Method::Knn, OutcomeKind::Binary)
}
