//! Marginal screening: one association measure applied to every feature
//! column against a single outcome, in parallel over column blocks.
//!
//! Each (outcome, feature) pair uses its pairwise-complete rows. Columns that
//! cannot be scored get score 0 and a flag instead of aborting the run.
//! Scores depend only on the data, the configuration and the seed, never on
//! the worker count.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HdmiError, Result};
use crate::io::DatasetHandle;
use crate::kde::{select_bandwidth, Bandwidth, BandwidthRule, Kde2dWorkspace, Kernel};
use crate::mi::{
    mi_binning_with, mi_fftkde_bc_with, mi_fftkde_cc_with, mi_knn_bc, mi_knn_cc, pearson_abs, FftKdeParams,
    MarginalMode, MiEstimate, Method, NeighborQuery, OutcomeBins, OutcomeKind, OutcomeRef,
};
use crate::rng::derive_seed;
use crate::stats;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreeningConfig {
    pub method: Method,
    pub outcome_kind: OutcomeKind,
    /// Outcome column by name, or by zero-based index if no name matches.
    pub outcome_column: Option<String>,
    /// Columns kept out of the screen (e.g. non-imaging covariates).
    pub exclude: Vec<String>,
    pub workers: usize,
    pub seed: u64,
    pub kernel: Kernel,
    pub bandwidth: BandwidthRule,
    /// Grid nodes per axis; `None` uses 256 for joint and 1024 for 1D grids.
    pub grid_size: Option<usize>,
    pub k: usize,
    /// Fixed bin count for the binning estimator.
    pub bins: Option<usize>,
    pub marginals: MarginalMode,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        ScreeningConfig {
            method: Method::Fftkde,
            outcome_kind: OutcomeKind::Continuous,
            outcome_column: None,
            exclude: Vec::new(),
            workers: 1,
            seed: 0,
            kernel: Kernel::Epanechnikov,
            bandwidth: BandwidthRule::Isj,
            grid_size: None,
            k: 3,
            bins: None,
            marginals: MarginalMode::Joint,
        }
    }
}

impl ScreeningConfig {
    pub fn new(method: Method, outcome_kind: OutcomeKind) -> Self {
        ScreeningConfig { method, outcome_kind, ..Self::default() }
    }

    fn fftkde_params(&self) -> FftKdeParams {
        let mut p = FftKdeParams {
            kernel: self.kernel,
            bandwidth: self.bandwidth,
            marginals: self.marginals,
            ..FftKdeParams::default()
        };
        if let Some(g) = self.grid_size {
            match self.outcome_kind {
                OutcomeKind::Continuous => p.grid_2d = g,
                OutcomeKind::Binary => p.grid_1d = g,
            }
        }
        p
    }

    fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(HdmiError::invalid("workers must be at least 1"));
        }
        if self.k == 0 {
            return Err(HdmiError::invalid("k must be at least 1"));
        }
        if self.bins == Some(0) {
            return Err(HdmiError::invalid("bin override must be positive"));
        }
        if let Some(g) = self.grid_size {
            if g < 16 || !g.is_power_of_two() {
                return Err(HdmiError::invalid(format!("grid size must be a power of two >= 16, got {g}")));
            }
        }
        Ok(())
    }

    /// Fewest complete pairs for which the configured estimator is attempted.
    fn min_rows(&self) -> usize {
        match self.method {
            Method::Knn => (self.k + 1).max(4),
            _ => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreFlag {
    Ok,
    Constant,
    TooFewRows,
    Degenerate,
    Numeric,
}

impl ScoreFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreFlag::Ok => "ok",
            ScoreFlag::Constant => "constant",
            ScoreFlag::TooFewRows => "too_few_rows",
            ScoreFlag::Degenerate => "degenerate",
            ScoreFlag::Numeric => "numeric",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub column_index: usize,
    pub column_name: String,
    /// Clamped estimate used for ranking.
    pub score: f64,
    pub raw: f64,
    pub n_used: usize,
    pub flag: ScoreFlag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub config: ScreeningConfig,
    /// One entry per screened column, in dataset column order.
    pub scores: Vec<FeatureScore>,
    pub seconds: f64,
    pub workers: usize,
}

impl ScreeningReport {
    pub fn score_vector(&self) -> Vec<f64> {
        self.scores.iter().map(|s| s.score).collect()
    }

    /// `index,name,score,raw,n_used,flag`
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "name", "score", "raw", "n_used", "flag"]).map_err(csv_io)?;
        for s in &self.scores {
            w.write_record([
                s.column_index.to_string(),
                s.column_name.clone(),
                s.score.to_string(),
                s.raw.to_string(),
                s.n_used.to_string(),
                s.flag.as_str().to_string(),
            ])
            .map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Configuration echo and scores, without timing.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Doc<'a> {
            config: &'a ScreeningConfig,
            n_features: usize,
            features: &'a [FeatureScore],
        }
        Ok(serde_json::to_string_pretty(&Doc { config: &self.config, n_features: self.scores.len(), features: &self.scores })?)
    }

    pub fn timing_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&serde_json::json!({
            "seconds": self.seconds,
            "workers": self.workers,
            "n_features": self.scores.len(),
        }))?)
    }
}

pub(crate) fn csv_io(e: csv::Error) -> HdmiError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => HdmiError::Io(io),
        other => HdmiError::invalid(format!("{other:?}")),
    }
}

/// The `k` highest scores, descending, ties broken by ascending column index.
pub fn top_k(report: &ScreeningReport, k: usize) -> Result<Vec<FeatureScore>> {
    let p = report.scores.len();
    if k == 0 || k > p {
        return Err(HdmiError::invalid(format!("k = {k} outside 1..={p}")));
    }
    let mut ranked: Vec<&FeatureScore> = report.scores.iter().collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.column_index.cmp(&b.column_index)));
    Ok(ranked.into_iter().take(k).cloned().collect())
}

/// Validates an outcome vector for its kind. Binary outcomes must take exactly
/// two distinct values; the smaller maps to class 0. NaN marks missing rows.
pub fn prepare_outcome(values: &[f64], kind: OutcomeKind) -> Result<Vec<f64>> {
    let present: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    if present.iter().any(|v| !v.is_finite()) {
        return Err(HdmiError::invalid("outcome contains infinite values"));
    }
    if present.len() < 2 {
        return Err(HdmiError::invalid("outcome has fewer than 2 observed rows"));
    }
    let sorted = stats::sorted_copy(&present);
    let distinct = stats::count_distinct_sorted(&sorted);
    match kind {
        OutcomeKind::Continuous => {
            if distinct < 2 {
                return Err(HdmiError::degenerate("outcome is constant"));
            }
            Ok(values.to_vec())
        }
        OutcomeKind::Binary => {
            if distinct != 2 {
                return Err(HdmiError::invalid(format!(
                    "binary outcome must take exactly 2 distinct values, found {distinct}"
                )));
            }
            let low = sorted[0];
            Ok(values.iter().map(|&v| if v.is_nan() { v } else if v == low { 0.0 } else { 1.0 }).collect())
        }
    }
}

/// Outcome-side artifacts computed once and shared read-only by workers.
struct OutcomeContext {
    kind: OutcomeKind,
    values: Vec<f64>,
    observed: usize,
    /// Fitted on all observed outcome rows; reused when a feature has no
    /// missing values on those rows.
    bandwidth: Option<Bandwidth>,
    bins: Option<OutcomeBins>,
}

impl OutcomeContext {
    fn new(values: Vec<f64>, config: &ScreeningConfig) -> Result<Self> {
        let observed_vals: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
        let mut ctx = OutcomeContext { kind: config.outcome_kind, observed: observed_vals.len(), values, bandwidth: None, bins: None };
        match (config.method, config.outcome_kind) {
            (Method::Fftkde, OutcomeKind::Continuous) => {
                ctx.bandwidth = Some(select_bandwidth(&observed_vals, config.bandwidth, config.kernel)?.0);
            }
            (Method::Binning, _) => {
                let classes: Vec<u8>;
                let y = match config.outcome_kind {
                    OutcomeKind::Continuous => OutcomeRef::Continuous(&observed_vals),
                    OutcomeKind::Binary => {
                        classes = observed_vals.iter().map(|&v| v as u8).collect();
                        OutcomeRef::Binary(&classes)
                    }
                };
                ctx.bins = Some(OutcomeBins::new(y, config.bins)?);
            }
            _ => {}
        }
        Ok(ctx)
    }
}

#[derive(Default)]
struct Scratch {
    column: Vec<f64>,
    y: Vec<f64>,
    x: Vec<f64>,
    classes: Vec<u8>,
    kde: Kde2dWorkspace,
}

fn score_pair(
    scratch: &mut Scratch,
    ctx: &OutcomeContext,
    config: &ScreeningConfig,
    column_index: usize,
    complete: bool,
) -> Result<MiEstimate> {
    let Scratch { y, x, classes, kde, .. } = scratch;
    let kind = ctx.kind;
    if kind == OutcomeKind::Binary {
        classes.clear();
        classes.extend(y.iter().map(|&v| v as u8));
    }
    let seed = derive_seed(config.seed, column_index as u64);
    match (config.method, kind) {
        (Method::Pearson, _) => pearson_abs(y, x).map(|e| MiEstimate { outcome_kind: kind, ..e }),
        (Method::Fftkde, OutcomeKind::Continuous) => {
            let h = if complete { ctx.bandwidth } else { None };
            mi_fftkde_cc_with(kde, y, h, x, &config.fftkde_params())
        }
        (Method::Fftkde, OutcomeKind::Binary) => mi_fftkde_bc_with(classes, x, &config.fftkde_params()),
        (Method::Knn, OutcomeKind::Continuous) => mi_knn_cc(y, x, &NeighborQuery::new(config.k).with_seed(seed)),
        (Method::Knn, OutcomeKind::Binary) => mi_knn_bc(classes, x, &NeighborQuery::new(config.k).with_seed(seed)),
        (Method::Binning, _) => {
            let subset;
            let bins = match (&ctx.bins, complete) {
                (Some(b), true) => b,
                _ => {
                    let yref = match kind {
                        OutcomeKind::Continuous => OutcomeRef::Continuous(y),
                        OutcomeKind::Binary => OutcomeRef::Binary(classes),
                    };
                    subset = OutcomeBins::new(yref, config.bins)?;
                    &subset
                }
            };
            mi_binning_with(bins, kind, x, config.bins)
        }
    }
}

fn score_column(
    data: &DatasetHandle,
    j: usize,
    ctx: &OutcomeContext,
    config: &ScreeningConfig,
    scratch: &mut Scratch,
) -> Result<FeatureScore> {
    data.read_column_into(j, &mut scratch.column)?;
    scratch.y.clear();
    scratch.x.clear();
    for (&yv, &xv) in ctx.values.iter().zip(&scratch.column) {
        if !yv.is_nan() && !xv.is_nan() {
            scratch.y.push(yv);
            scratch.x.push(xv);
        }
    }
    let n_used = scratch.x.len();
    let complete = n_used == ctx.observed;
    let blank = |flag| FeatureScore {
        column_index: j,
        column_name: data.column_names()[j].clone(),
        score: 0.0,
        raw: 0.0,
        n_used,
        flag,
    };
    if n_used < config.min_rows() {
        return Ok(blank(ScoreFlag::TooFewRows));
    }
    let (lo, hi) = stats::min_max(&scratch.x);
    if !(hi > lo) {
        return Ok(blank(ScoreFlag::Constant));
    }
    if ctx.kind == OutcomeKind::Binary && !scratch.y.iter().any(|&v| v != scratch.y[0]) {
        return Ok(blank(ScoreFlag::Degenerate));
    }
    match score_pair(scratch, ctx, config, j, complete) {
        Ok(est) => Ok(FeatureScore { score: est.clamped, raw: est.raw, flag: ScoreFlag::Ok, ..blank(ScoreFlag::Ok) }),
        Err(HdmiError::Numeric(_)) => Ok(blank(ScoreFlag::Numeric)),
        Err(HdmiError::Degenerate(_)) | Err(HdmiError::InvalidInput(_)) => Ok(blank(ScoreFlag::Degenerate)),
        Err(e) => Err(e),
    }
}

/// Screens the listed columns against an explicit outcome vector.
pub fn screen_columns(
    data: &DatasetHandle,
    outcome: &[f64],
    columns: &[usize],
    config: &ScreeningConfig,
) -> Result<ScreeningReport> {
    config.validate()?;
    if data.rows() < 2 {
        return Err(HdmiError::invalid("dataset needs at least 2 rows"));
    }
    if outcome.len() != data.rows() {
        return Err(HdmiError::invalid(format!(
            "outcome has {} rows, dataset has {}",
            outcome.len(),
            data.rows()
        )));
    }
    if let Some(&bad) = columns.iter().find(|&&j| j >= data.cols()) {
        return Err(HdmiError::invalid(format!("column {bad} out of range")));
    }
    let start = Instant::now();
    let ctx = OutcomeContext::new(prepare_outcome(outcome, config.outcome_kind)?, config)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| HdmiError::invalid(format!("cannot start worker pool: {e}")))?;
    let block = columns.len().div_ceil(config.workers * 8).max(1);
    let blocks: Vec<&[usize]> = columns.chunks(block).collect();
    let per_block: Vec<Result<Vec<FeatureScore>>> = pool.install(|| {
        blocks
            .par_iter()
            .map_init(Scratch::default, |scratch, blk| {
                blk.iter().map(|&j| score_column(data, j, &ctx, config, scratch)).collect()
            })
            .collect()
    });
    let mut scores = Vec::with_capacity(columns.len());
    for b in per_block {
        scores.extend(b?);
    }
    Ok(ScreeningReport { config: config.clone(), scores, seconds: start.elapsed().as_secs_f64(), workers: config.workers })
}

/// Screens every column except `skip` against `outcome`.
pub fn screen_with_outcome(
    data: &DatasetHandle,
    outcome: &[f64],
    skip: &[usize],
    config: &ScreeningConfig,
) -> Result<ScreeningReport> {
    let columns: Vec<usize> = (0..data.cols()).filter(|j| !skip.contains(j)).collect();
    screen_columns(data, outcome, &columns, config)
}

fn resolve_exclusions(data: &DatasetHandle, config: &ScreeningConfig) -> Result<Vec<usize>> {
    config
        .exclude
        .iter()
        .map(|name| data.column_index(name).ok_or_else(|| HdmiError::invalid(format!("excluded column '{name}' not found"))))
        .collect()
}

/// Screens every non-excluded, non-outcome column against the configured
/// outcome column.
pub fn screen(data: &DatasetHandle, config: &ScreeningConfig) -> Result<ScreeningReport> {
    let key = config.outcome_column.as_deref().ok_or_else(|| HdmiError::invalid("no outcome column configured"))?;
    let outcome_idx = data.resolve_column(key)?;
    let mut skip = resolve_exclusions(data, config)?;
    skip.push(outcome_idx);
    let outcome = data.column(outcome_idx)?;
    screen_with_outcome(data, &outcome, &skip, config)
}

/// Screens all non-excluded columns against an outcome supplied separately.
pub fn screen_external(data: &DatasetHandle, outcome: &[f64], config: &ScreeningConfig) -> Result<ScreeningReport> {
    let skip = resolve_exclusions(data, config)?;
    screen_with_outcome(data, outcome, &skip, config)
}
