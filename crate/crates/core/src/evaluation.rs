//! Variable-selection quality of a screen against known ground truth.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HdmiError, Result};
use crate::io::DatasetHandle;
use crate::mi::{Method, OutcomeKind};
use crate::rng::derive_seed;
use crate::screening::{csv_io, screen_columns, ScreeningConfig, ScreeningReport};
use crate::simulation::{simulate, SimulationMode, SimulationSpec};

/// Scores with 0/1 labels, 1 marking a true covariate.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledScores {
    scores: Vec<f64>,
    labels: Vec<u8>,
}

impl LabeledScores {
    pub fn new(scores: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(HdmiError::invalid(format!(
                "{} scores but {} labels",
                scores.len(),
                labels.len()
            )));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(HdmiError::invalid("scores must be finite"));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(HdmiError::invalid("labels must be 0 or 1"));
        }
        Ok(LabeledScores { scores, labels })
    }

    /// Labels a screening report by membership of each column in `support`.
    pub fn from_report(report: &ScreeningReport, support: &[usize]) -> Result<Self> {
        let scores = report.scores.iter().map(|s| s.score).collect();
        let labels = report.scores.iter().map(|s| support.contains(&s.column_index) as u8).collect();
        Self::new(scores, labels)
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }
}

/// Area under the ROC curve via the Mann-Whitney statistic with midranks
/// for ties.
pub fn auroc(ls: &LabeledScores) -> Result<f64> {
    let n = ls.scores.len();
    let n_pos = ls.positives();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(HdmiError::invalid("AUROC needs both positive and negative labels"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ls.scores[a].total_cmp(&ls.scores[b]));
    // Twice the positive rank sum keeps midranks integral.
    let mut rank_sum2: u128 = 0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && ls.scores[order[j]] == ls.scores[order[i]] {
            j += 1;
        }
        let mid2 = (i + 1 + j) as u128;
        let pos = order[i..j].iter().filter(|&&k| ls.labels[k] == 1).count() as u128;
        rank_sum2 += pos * mid2;
        i = j;
    }
    let (p, q) = (n_pos as u128, n_neg as u128);
    let u2 = rank_sum2 - p * (p + 1);
    Ok(u2 as f64 / (2 * p * q) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

/// Overlap between the `k` top-scored features (ties to the lower index)
/// and the positive labels.
pub fn selection_confusion(ls: &LabeledScores, k: usize) -> Result<Confusion> {
    let p = ls.scores.len();
    if k == 0 || k > p {
        return Err(HdmiError::invalid(format!("k = {k} outside 1..={p}")));
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| ls.scores[b].total_cmp(&ls.scores[a]).then(a.cmp(&b)));
    let tp = order[..k].iter().filter(|&&i| ls.labels[i] == 1).count();
    Ok(Confusion { true_positives: tp, false_positives: k - tp, false_negatives: ls.positives() - tp })
}

/// Mean and normal-approximation 95% half-width `1.96 sd / sqrt(R)`.
pub fn mean_and_half_width(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / r;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0);
    (mean, 1.96 * var.sqrt() / r.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub p_true: usize,
    pub mode: SimulationMode,
    pub outcome: crate::simulation::OutcomeVariant,
    pub snr: f64,
    pub method: Method,
    pub mean_auroc: f64,
    pub ci_half_width: f64,
    pub replications: usize,
    /// Replications that failed to simulate or screen; excluded from the mean.
    pub failed: usize,
    pub aurocs: Vec<f64>,
    pub first_error: Option<String>,
}

/// `R` distinct replication seeds derived from `root`.
pub fn replication_seeds(root: u64, replications: usize) -> Vec<u64> {
    (0..replications as u64).map(|r| derive_seed(root, r)).collect()
}

fn outcome_kind(spec: &SimulationSpec) -> OutcomeKind {
    if spec.outcome.is_binary() {
        OutcomeKind::Binary
    } else {
        OutcomeKind::Continuous
    }
}

/// For each spec and replication seed: simulate once, screen every column
/// with each method, and score by AUROC. All methods see the same simulated
/// outcome within a replication.
pub fn replicate_with_seeds(
    data: &DatasetHandle,
    specs: &[SimulationSpec],
    methods: &[Method],
    seeds: &[u64],
    base: &ScreeningConfig,
) -> Result<Vec<CellSummary>> {
    if seeds.len() < 2 {
        return Err(HdmiError::invalid("at least 2 replications are required"));
    }
    let mut sorted = seeds.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(HdmiError::invalid("replication seeds must be distinct"));
    }
    if methods.is_empty() || specs.is_empty() {
        return Err(HdmiError::invalid("need at least one spec and one method"));
    }
    let columns: Vec<usize> = (0..data.cols()).collect();
    let mut cells = Vec::with_capacity(specs.len() * methods.len());
    for spec in specs {
        let mut per_method: Vec<(Vec<f64>, usize, Option<String>)> = vec![(Vec::new(), 0, None); methods.len()];
        for &seed in seeds {
            let sim = match simulate(data, &spec.with_seed(seed)) {
                Ok(s) => s,
                Err(e) => {
                    for cell in per_method.iter_mut() {
                        cell.1 += 1;
                        cell.2.get_or_insert_with(|| e.to_string());
                    }
                    continue;
                }
            };
            for (m, cell) in methods.iter().zip(per_method.iter_mut()) {
                let config = ScreeningConfig {
                    method: *m,
                    outcome_kind: outcome_kind(spec),
                    seed,
                    ..base.clone()
                };
                let result = screen_columns(data, &sim.y, &columns, &config)
                    .and_then(|report| LabeledScores::from_report(&report, &sim.true_support))
                    .and_then(|ls| auroc(&ls));
                match result {
                    Ok(a) => cell.0.push(a),
                    Err(e) => {
                        cell.1 += 1;
                        cell.2.get_or_insert_with(|| e.to_string());
                    }
                }
            }
        }
        for (m, (aurocs, failed, first_error)) in methods.iter().zip(per_method) {
            let (mean, hw) = mean_and_half_width(&aurocs);
            cells.push(CellSummary {
                p_true: spec.p_true,
                mode: spec.mode,
                outcome: spec.outcome,
                snr: spec.snr,
                method: *m,
                mean_auroc: mean,
                ci_half_width: hw,
                replications: seeds.len(),
                failed,
                aurocs,
                first_error,
            });
        }
    }
    Ok(cells)
}

/// [`replicate_with_seeds`] with `replications` seeds derived from `root_seed`.
pub fn replicate_and_summarize(
    data: &DatasetHandle,
    specs: &[SimulationSpec],
    methods: &[Method],
    replications: usize,
    root_seed: u64,
    base: &ScreeningConfig,
) -> Result<Vec<CellSummary>> {
    replicate_with_seeds(data, specs, methods, &replication_seeds(root_seed, replications), base)
}

/// `p_true,mode,outcome,snr,method,mean_auroc,ci_half_width,R,failed`
pub fn write_summary_csv<W: Write>(cells: &[CellSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p_true", "mode", "outcome", "snr", "method", "mean_auroc", "ci_half_width", "R", "failed"])
        .map_err(csv_io)?;
    for c in cells {
        w.write_record([
            c.p_true.to_string(),
            variant_name(&c.mode),
            variant_name(&c.outcome),
            c.snr.to_string(),
            c.method.name().to_string(),
            c.mean_auroc.to_string(),
            c.ci_half_width.to_string(),
            c.replications.to_string(),
            c.failed.to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv_file(cells: &[CellSummary], path: impl AsRef<Path>) -> Result<()> {
    write_summary_csv(cells, std::fs::File::create(path)?)
}

/// Serde name of a unit enum variant.
pub(crate) fn variant_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}
