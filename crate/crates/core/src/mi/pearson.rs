use crate::error::{HdmiError, Result};
use crate::mi::{check_pair, MiEstimate, Method, OutcomeKind};
use crate::stats;

/// Absolute Pearson correlation as the standardized inner product
/// `|sum y~ x~| / n` with population standard deviations.
pub fn pearson_abs(y: &[f64], x: &[f64]) -> Result<MiEstimate> {
    check_pair(y.len(), x)?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(HdmiError::invalid("outcome contains non-finite values"));
    }
    pearson_raw(y, x).map(|r| MiEstimate::new(r, Method::Pearson, OutcomeKind::Continuous))?
}

pub(crate) fn pearson_raw(y: &[f64], x: &[f64]) -> Result<f64> {
    let (my, sy) = stats::mean_sd(y);
    let (mx, sx) = stats::mean_sd(x);
    if !(sy > 0.0) || !(sx > 0.0) {
        return Err(HdmiError::degenerate("correlation needs non-constant inputs"));
    }
    let dot: f64 = y.iter().zip(x).map(|(a, b)| ((a - my) / sy) * ((b - mx) / sx)).sum();
    Ok((dot / y.len() as f64).abs().min(1.0))
}
