//! Synthetic outcomes drawn from a real (or synthetic) design matrix.
//!
//! A random subset of columns becomes the true support. Their coefficients
//! are Gaussian with mean one and Toeplitz covariance. The standardized
//! sub-matrix (optionally squared and re-standardized) drives either a
//! Gaussian-noise continuous outcome or a logistic binary outcome.
//!
//! One root seed expands into the named streams "columns", "beta", "noise"
//! and "bernoulli", so each component can be reproduced on its own.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{HdmiError, Result};
use crate::io::DatasetHandle;
use crate::rng::stream;
use crate::stats;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimulationMode {
    Linear,
    /// Element-wise square of the standardized support before re-standardizing.
    Nonlinear,
    /// Support and coefficients are drawn as usual but the outcome ignores
    /// them; used to check that scores carry no signal under independence.
    Null,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeVariant {
    Continuous,
    BinaryOriginal,
    BinaryTranslated,
}

impl OutcomeVariant {
    pub fn is_binary(self) -> bool {
        self != OutcomeVariant::Continuous
    }
}

/// How the noise level follows from the signal-to-noise ratio.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrScaling {
    /// `sigma^2 = |X b|^2 / snr`: the summed signal energy, so the realized
    /// per-observation ratio is `snr / N`.
    #[default]
    Verbatim,
    /// `sigma^2 = |X b|^2 / (N snr)`: the realized ratio is `snr`.
    PerObservation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub p_true: usize,
    pub mode: SimulationMode,
    pub outcome: OutcomeVariant,
    pub snr: f64,
    pub toeplitz_rho: f64,
    pub seed: u64,
    pub snr_scaling: SnrScaling,
}

impl SimulationSpec {
    pub fn new(p_true: usize, mode: SimulationMode, outcome: OutcomeVariant, seed: u64) -> Self {
        SimulationSpec { p_true, mode, outcome, snr: 3.0, toeplitz_rho: 0.6, seed, snr_scaling: SnrScaling::Verbatim }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SimulationSpec { seed, ..self.clone() }
    }

    fn validate(&self) -> Result<()> {
        if self.p_true == 0 {
            return Err(HdmiError::invalid("p_true must be at least 1"));
        }
        if !(self.snr > 0.0) || !self.snr.is_finite() {
            return Err(HdmiError::invalid(format!("snr must be positive and finite, got {}", self.snr)));
        }
        if !(self.toeplitz_rho.abs() < 1.0) {
            return Err(HdmiError::invalid(format!("toeplitz rho must lie in (-1, 1), got {}", self.toeplitz_rho)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulatedDataset {
    /// Continuous values, or 0/1 for binary outcomes.
    pub y: Vec<f64>,
    /// Sorted column indices into the design.
    pub true_support: Vec<usize>,
    /// Coefficient of `true_support[i]`.
    pub beta_true: Vec<f64>,
    pub sigma_true: Option<f64>,
}

/// Standardized columns of the true support, in `support` order.
#[derive(Clone, Debug, PartialEq)]
pub struct TrueDesign {
    pub support: Vec<usize>,
    pub columns: Vec<Vec<f64>>,
}

/// `arctanh(sqrt(1/3))`, the shift applied to the standardized linear
/// predictor in the translated binary variant.
pub fn translation_offset() -> f64 {
    (1.0f64 / 3.0).sqrt().atanh()
}

pub fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Lower-triangular Cholesky factor of `rho^|i-j|`, row-major.
fn toeplitz_cholesky(p: usize, rho: f64) -> Result<Vec<f64>> {
    let mut l = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let mut s = rho.powi((i - j) as i32);
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(HdmiError::Numeric("Toeplitz covariance is not positive definite".into()));
                }
                l[i * p + i] = s.sqrt();
            } else {
                l[i * p + j] = s / l[j * p + j];
            }
        }
    }
    Ok(l)
}

/// Coefficients drawn from `N(1, Sigma)` with `Sigma_ij = rho^|i-j|`.
pub fn sample_beta(p_true: usize, toeplitz_rho: f64, seed: u64) -> Result<Vec<f64>> {
    if p_true == 0 {
        return Err(HdmiError::invalid("p_true must be at least 1"));
    }
    if !(toeplitz_rho.abs() < 1.0) {
        return Err(HdmiError::invalid(format!("toeplitz rho must lie in (-1, 1), got {toeplitz_rho}")));
    }
    let l = toeplitz_cholesky(p_true, toeplitz_rho)?;
    let mut rng = stream(seed, "beta");
    let z: Vec<f64> = (0..p_true).map(|_| rng.sample(StandardNormal)).collect();
    Ok((0..p_true).map(|i| 1.0 + (0..=i).map(|k| l[i * p_true + k] * z[k]).sum::<f64>()).collect())
}

/// Columns that may enter the support: fully observed and non-constant.
pub fn eligible_columns(data: &DatasetHandle) -> Result<Vec<usize>> {
    let mut buf = Vec::new();
    let mut out = Vec::new();
    for j in 0..data.cols() {
        data.read_column_into(j, &mut buf)?;
        if buf.iter().any(|v| v.is_nan()) {
            continue;
        }
        let (lo, hi) = stats::min_max(&buf);
        if hi > lo {
            out.push(j);
        }
    }
    Ok(out)
}

fn standardized(mut v: Vec<f64>, what: &str) -> Result<Vec<f64>> {
    if !stats::standardize_in_place(&mut v) {
        return Err(HdmiError::degenerate(format!("{what} has zero spread")));
    }
    Ok(v)
}

/// Picks the support uniformly at random from eligible columns and returns
/// its standardized (and, in nonlinear mode, squared and re-standardized)
/// columns.
pub fn build_design(data: &DatasetHandle, spec: &SimulationSpec) -> Result<TrueDesign> {
    spec.validate()?;
    let eligible = eligible_columns(data)?;
    if eligible.len() < spec.p_true {
        return Err(HdmiError::invalid(format!(
            "need {} eligible columns, dataset has {}",
            spec.p_true,
            eligible.len()
        )));
    }
    let mut rng = stream(spec.seed, "columns");
    let mut support: Vec<usize> =
        rand::seq::index::sample(&mut rng, eligible.len(), spec.p_true).into_iter().map(|i| eligible[i]).collect();
    support.sort_unstable();
    let mut columns = Vec::with_capacity(support.len());
    for &j in &support {
        let mut col = standardized(data.column(j)?, &data.column_names()[j])?;
        if spec.mode == SimulationMode::Nonlinear {
            col.iter_mut().for_each(|v| *v *= *v);
            col = standardized(col, &format!("squared column {}", data.column_names()[j]))?;
        }
        columns.push(col);
    }
    Ok(TrueDesign { support, columns })
}

fn linear_predictor(columns: &[Vec<f64>], beta: &[f64]) -> Result<Vec<f64>> {
    if columns.len() != beta.len() || columns.is_empty() {
        return Err(HdmiError::invalid(format!(
            "{} design columns but {} coefficients",
            columns.len(),
            beta.len()
        )));
    }
    let n = columns[0].len();
    if columns.iter().any(|c| c.len() != n) {
        return Err(HdmiError::invalid("design columns differ in length"));
    }
    let mut t = vec![0.0; n];
    for (c, &b) in columns.iter().zip(beta) {
        for (ti, &ci) in t.iter_mut().zip(c) {
            *ti += b * ci;
        }
    }
    Ok(t)
}

/// `y = X b + e`, `e ~ N(0, sigma^2)`. Returns `(y, sigma)`.
pub fn simulate_continuous(
    columns: &[Vec<f64>],
    beta: &[f64],
    snr: f64,
    scaling: SnrScaling,
    seed: u64,
) -> Result<(Vec<f64>, f64)> {
    if !(snr > 0.0) || !snr.is_finite() {
        return Err(HdmiError::invalid(format!("snr must be positive and finite, got {snr}")));
    }
    let mut y = linear_predictor(columns, beta)?;
    let energy: f64 = y.iter().map(|v| v * v).sum();
    if !(energy > 0.0) {
        return Err(HdmiError::degenerate("signal vector is zero"));
    }
    let sigma = match scaling {
        SnrScaling::Verbatim => (energy / snr).sqrt(),
        SnrScaling::PerObservation => (energy / (y.len() as f64 * snr)).sqrt(),
    };
    let mut rng = stream(seed, "noise");
    for v in y.iter_mut() {
        *v += sigma * rng.sample::<f64, _>(StandardNormal);
    }
    Ok((y, sigma))
}

fn bernoulli_draws(prob_logit: &[f64], seed: u64) -> Result<Vec<f64>> {
    let mut rng = stream(seed, "bernoulli");
    let y: Vec<f64> = prob_logit.iter().map(|&t| (rng.random::<f64>() < logistic(t)) as u8 as f64).collect();
    let ones = y.iter().filter(|&&v| v == 1.0).count();
    if ones == 0 || ones == y.len() {
        return Err(HdmiError::degenerate(format!(
            "simulated binary outcome has a single class (n = {}); choose another seed",
            y.len()
        )));
    }
    Ok(y)
}

/// Logistic outcome from the standardized linear predictor, shifted by
/// [`translation_offset`] in the translated variant.
pub fn simulate_binary(columns: &[Vec<f64>], beta: &[f64], translated: bool, seed: u64) -> Result<Vec<f64>> {
    let mut t = standardized(linear_predictor(columns, beta)?, "linear predictor")?;
    if translated {
        let c = translation_offset();
        t.iter_mut().for_each(|v| *v += c);
    }
    bernoulli_draws(&t, seed)
}

/// Runs the full procedure on `data`.
pub fn simulate(data: &DatasetHandle, spec: &SimulationSpec) -> Result<SimulatedDataset> {
    let design = build_design(data, spec)?;
    let beta = sample_beta(spec.p_true, spec.toeplitz_rho, spec.seed)?;
    let (y, sigma_true) = match (spec.mode, spec.outcome) {
        (SimulationMode::Null, OutcomeVariant::Continuous) => {
            let mut rng = stream(spec.seed, "noise");
            ((0..data.rows()).map(|_| rng.sample(StandardNormal)).collect(), None)
        }
        (SimulationMode::Null, variant) => {
            let shift = if variant == OutcomeVariant::BinaryTranslated { translation_offset() } else { 0.0 };
            (bernoulli_draws(&vec![shift; data.rows()], spec.seed)?, None)
        }
        (_, OutcomeVariant::Continuous) => {
            let (y, s) = simulate_continuous(&design.columns, &beta, spec.snr, spec.snr_scaling, spec.seed)?;
            (y, Some(s))
        }
        (_, variant) => (
            simulate_binary(&design.columns, &beta, variant == OutcomeVariant::BinaryTranslated, spec.seed)?,
            None,
        ),
    };
    Ok(SimulatedDataset { y, true_support: design.support, beta_true: beta, sigma_true })
}

/// Gaussian design whose columns follow an AR(`phi`) sequence along the
/// column index: `corr(X_i, X_j) = phi^|i-j|`.
pub fn ar_design(rows: usize, cols: usize, phi: f64, seed: u64) -> Result<DatasetHandle> {
    if rows < 2 || cols == 0 {
        return Err(HdmiError::invalid("design needs at least 2 rows and 1 column"));
    }
    if !(phi.abs() < 1.0) {
        return Err(HdmiError::invalid(format!("AR coefficient must lie in (-1, 1), got {phi}")));
    }
    let mut rng = stream(seed, "design");
    let innovation = (1.0 - phi * phi).sqrt();
    let mut values = Vec::with_capacity(rows * cols);
    for j in 0..cols {
        for i in 0..rows {
            let z: f64 = rng.sample(StandardNormal);
            let v = if j == 0 { z } else { phi * values[(j - 1) * rows + i] + innovation * z };
            values.push(v);
        }
    }
    let names = (0..cols).map(|j| format!("x{j}")).collect();
    DatasetHandle::from_column_major(rows, names, values)
}
