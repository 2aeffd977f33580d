//! Mutual information from FFT kernel density estimates, integrated over the
//! grid with a left-Riemann (forward Euler) sum.

use serde::{Deserialize, Serialize};

use crate::error::{HdmiError, Result};
use crate::kde::{
    cushioned_grid, kde_1d_on_grid, kde_2d_with, select_bandwidth, AxisSample, Bandwidth, BandwidthRule,
    DensityGrid2D, Kde2dWorkspace, Kernel, DEFAULT_GRID_1D, DEFAULT_GRID_2D,
};
use crate::mi::{check_classes, check_pair, MiEstimate, Method, OutcomeKind, DENSITY_FLOOR};
use crate::stats;

/// Where the marginal densities in the log-ratio come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarginalMode {
    /// Riemann sums of the joint grid along each axis.
    #[default]
    Joint,
    /// Separate 1D estimates on the joint grid's axes.
    Independent,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FftKdeParams {
    pub kernel: Kernel,
    pub bandwidth: BandwidthRule,
    /// Nodes per axis of the joint grid (continuous outcome).
    pub grid_2d: usize,
    /// Nodes of the shared grid for class-conditional densities.
    pub grid_1d: usize,
    pub marginals: MarginalMode,
}

impl Default for FftKdeParams {
    fn default() -> Self {
        FftKdeParams {
            kernel: Kernel::Epanechnikov,
            bandwidth: BandwidthRule::Isj,
            grid_2d: DEFAULT_GRID_2D,
            grid_1d: DEFAULT_GRID_1D,
            marginals: MarginalMode::Joint,
        }
    }
}

impl FftKdeParams {
    fn validate(&self) -> Result<()> {
        for g in [self.grid_1d, self.grid_2d] {
            if g < 16 || !g.is_power_of_two() {
                return Err(HdmiError::invalid(format!("grid size must be a power of two >= 16, got {g}")));
            }
        }
        Ok(())
    }
}

fn joint_mi(joint: &DensityGrid2D, fy: &[f64], fx: &[f64]) -> f64 {
    let cols = joint.cols();
    let ln_fx: Vec<f64> = fx.iter().map(|v| if *v > 0.0 { v.ln() } else { f64::NAN }).collect();
    let mut acc = 0.0;
    for (r, row) in joint.density.chunks(cols).enumerate() {
        if !(fy[r] > 0.0) {
            continue;
        }
        let ln_fy = fy[r].ln();
        for (c, &f) in row.iter().enumerate() {
            if f > DENSITY_FLOOR && fx[c] > 0.0 {
                acc += f * (f.ln() - ln_fy - ln_fx[c]);
            }
        }
    }
    acc * joint.cell_area()
}

pub(crate) fn mi_fftkde_cc_with(
    ws: &mut Kde2dWorkspace,
    y: &[f64],
    y_bandwidth: Option<Bandwidth>,
    x: &[f64],
    params: &FftKdeParams,
) -> Result<MiEstimate> {
    params.validate()?;
    check_pair(y.len(), x)?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(HdmiError::invalid("outcome contains non-finite values"));
    }
    let hy = match y_bandwidth {
        Some(h) => h,
        None => select_bandwidth(y, params.bandwidth, params.kernel)?.0,
    };
    let ys = AxisSample::new(y, hy, "outcome")?;
    let hx = select_bandwidth(x, params.bandwidth, params.kernel)?.0;
    let xs = AxisSample::new(x, hx, "feature")?;
    let joint = kde_2d_with(ws, ys, xs, params.kernel, params.grid_2d)?;
    let raw = match params.marginals {
        MarginalMode::Joint => joint_mi(&joint, &joint.marginal_y(), &joint.marginal_x()),
        MarginalMode::Independent => {
            let fy = kde_1d_on_grid(y, params.kernel, hy, joint.grid.axis_y)?;
            let fx = kde_1d_on_grid(x, params.kernel, hx, joint.grid.axis_x)?;
            joint_mi(&joint, &fy.density, &fx.density)
        }
    };
    MiEstimate::new(raw, Method::Fftkde, OutcomeKind::Continuous)
}

/// MI between two continuous samples from their joint FFT-KDE with per-axis
/// bandwidths: `sum f ln(f / (f_y f_x)) dy dx` over cells with `f > 1e-12`.
pub fn mi_fftkde_cc(y: &[f64], x: &[f64], params: &FftKdeParams) -> Result<MiEstimate> {
    mi_fftkde_cc_with(&mut Kde2dWorkspace::default(), y, None, x, params)
}

pub(crate) fn mi_fftkde_bc_with(y: &[u8], x: &[f64], params: &FftKdeParams) -> Result<MiEstimate> {
    params.validate()?;
    check_pair(y.len(), x)?;
    let counts = check_classes(y)?;
    let by_class: [Vec<f64>; 2] = [0u8, 1u8].map(|c| y.iter().zip(x).filter(|(k, _)| **k == c).map(|(_, v)| *v).collect());
    let mut bandwidths = [None, None];
    for (c, xs) in by_class.iter().enumerate() {
        let (lo, hi) = stats::min_max(xs);
        if !(hi > lo) {
            return Err(HdmiError::degenerate(format!("feature is constant within class {c}")));
        }
        bandwidths[c] = Some(select_bandwidth(xs, params.bandwidth, params.kernel)?.0);
    }
    let [h0, h1] = bandwidths.map(|h| h.expect("set above"));
    let widest = if h0 > h1 { h0 } else { h1 };
    let (lo, hi) = stats::min_max(x);
    let grid = cushioned_grid(lo, hi, params.kernel, widest, params.grid_1d)?;
    let f0 = kde_1d_on_grid(&by_class[0], params.kernel, h0, grid)?;
    let f1 = kde_1d_on_grid(&by_class[1], params.kernel, h1, grid)?;

    let n = y.len() as f64;
    let weights = [counts[0] as f64 / n, counts[1] as f64 / n];
    let mixture: Vec<f64> =
        f0.density.iter().zip(&f1.density).map(|(a, b)| weights[0] * a + weights[1] * b).collect();
    let mut raw = 0.0;
    for (w, f) in weights.iter().zip([&f0.density, &f1.density]) {
        let inner: f64 = f
            .iter()
            .zip(&mixture)
            .filter(|(v, _)| **v > DENSITY_FLOOR)
            .map(|(v, m)| v * (v / m).ln())
            .sum();
        raw += w * inner;
    }
    MiEstimate::new(raw * grid.spacing(), Method::Fftkde, OutcomeKind::Binary)
}

/// MI between a binary class label and a continuous feature:
/// `sum_c pi_c sum f(x|c) ln(f(x|c) / f_mix(x)) dx`, with one 1D estimate
/// per class on a shared grid.
pub fn mi_fftkde_bc(y: &[u8], x: &[f64], params: &FftKdeParams) -> Result<MiEstimate> {
    mi_fftkde_bc_with(y, x, params)
}
