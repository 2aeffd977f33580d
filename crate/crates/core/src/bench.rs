//! Wall-clock screening cost as a function of the number of features.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{HdmiError, Result};
use crate::evaluation::mean_and_half_width;
use crate::io::DatasetHandle;
use crate::mi::Method;
use crate::screening::{csv_io, screen_columns, ScreeningConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub method: Method,
    pub fraction: f64,
    pub features: usize,
    pub mean_seconds: f64,
    /// `1.96 sd / sqrt(R)`; NaN for a single replication.
    pub ci_half_width: f64,
    pub replications: usize,
    pub seconds: Vec<f64>,
}

/// Screens the first `ceil(fraction * p)` candidate columns for every
/// (method, fraction) pair, `replications` times each. Candidates are all
/// columns except the outcome and the configured exclusions.
pub fn run_bench(
    data: &DatasetHandle,
    outcome: &[f64],
    candidates: &[usize],
    methods: &[Method],
    fractions: &[f64],
    replications: usize,
    base: &ScreeningConfig,
) -> Result<Vec<BenchCell>> {
    if replications < 1 {
        return Err(HdmiError::invalid("replications must be at least 1"));
    }
    if methods.is_empty() || fractions.is_empty() {
        return Err(HdmiError::invalid("need at least one method and one fraction"));
    }
    if let Some(f) = fractions.iter().find(|&&f| !(f > 0.0 && f <= 1.0)) {
        return Err(HdmiError::invalid(format!("fraction {f} outside (0, 1]")));
    }
    if candidates.is_empty() {
        return Err(HdmiError::invalid("no candidate columns to screen"));
    }
    let mut cells = Vec::with_capacity(methods.len() * fractions.len());
    for &method in methods {
        let config = ScreeningConfig { method, ..base.clone() };
        for &fraction in fractions {
            let count = ((fraction * candidates.len() as f64).ceil() as usize).clamp(1, candidates.len());
            let columns = &candidates[..count];
            let mut seconds = Vec::with_capacity(replications);
            for _ in 0..replications {
                let start = Instant::now();
                screen_columns(data, outcome, columns, &config)?;
                seconds.push(start.elapsed().as_secs_f64());
            }
            let (mean, hw) = mean_and_half_width(&seconds);
            cells.push(BenchCell {
                method,
                fraction,
                features: count,
                mean_seconds: mean,
                ci_half_width: hw,
                replications,
                seconds,
            });
        }
    }
    Ok(cells)
}

/// `method,fraction,features,mean_seconds,ci_half_width,R`
pub fn write_bench_csv<W: Write>(cells: &[BenchCell], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "fraction", "features", "mean_seconds", "ci_half_width", "R"]).map_err(csv_io)?;
    for c in cells {
        w.write_record([
            c.method.name().to_string(),
            c.fraction.to_string(),
            c.features.to_string(),
            c.mean_seconds.to_string(),
            c.ci_half_width.to_string(),
            c.replications.to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}
