//! Kernel density estimation on equispaced grids.
//!
//! Samples are linearly binned onto the grid and the binned masses are
//! convolved with the sampled kernel through zero-padded FFTs. Two-dimensional
//! estimates use a product kernel with one bandwidth per axis.

mod bandwidth;

pub use bandwidth::{
    bandwidth_isj, bandwidth_silverman, select_bandwidth, Bandwidth, BandwidthRule, IsjBandwidth, ISJ_GRID_SIZE,
};

use crate::error::{HdmiError, Result};
use crate::fft::{convolve_grid, Grid1D, Grid2D, GridView, SeparableConvolver};
use crate::stats;

pub const DEFAULT_GRID_1D: usize = 1024;
pub const DEFAULT_GRID_2D: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Epanechnikov,
    Gaussian,
}

impl Kernel {
    pub fn eval(self, u: f64) -> f64 {
        match self {
            Kernel::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
            Kernel::Gaussian => (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt(),
        }
    }

    /// Half-width of the support in bandwidth units (Gaussian truncated at 4).
    pub fn support_radius(self) -> f64 {
        match self {
            Kernel::Epanechnikov => 1.0,
            Kernel::Gaussian => 4.0,
        }
    }

    /// Ratio of this kernel's canonical bandwidth to the Gaussian one,
    /// `(R(K) / mu2(K)^2)^(1/5)` over the same quantity for the Gaussian.
    pub fn gaussian_equivalent_scale(self) -> f64 {
        match self {
            Kernel::Epanechnikov => (30.0 * std::f64::consts::PI.sqrt()).powf(0.2),
            Kernel::Gaussian => 1.0,
        }
    }

    /// Kernel `K(m dx / h) / h` on offsets `-L..=L`, rescaled so its Riemann
    /// sum is exactly one. Returns the samples and `L`.
    pub(crate) fn sampled(self, h: f64, dx: f64) -> (Vec<f64>, usize) {
        let half = (self.support_radius() * h / dx).floor() as usize;
        let mut taps: Vec<f64> =
            (0..=2 * half).map(|i| self.eval((i as f64 - half as f64) * dx / h) / h).collect();
        let mass: f64 = taps.iter().sum::<f64>() * dx;
        if mass > 0.0 {
            taps.iter_mut().for_each(|t| *t /= mass);
        } else {
            // bandwidth narrower than one cell: collapse onto the centre node
            taps = vec![0.0; 2 * half + 1];
            taps[half] = 1.0 / dx;
        }
        (taps, half)
    }
}

/// Density values on a 1D grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid1D {
    pub grid: Grid1D,
    pub density: Vec<f64>,
}

impl DensityGrid1D {
    /// Left-Riemann integral.
    pub fn mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.grid.spacing()
    }

    /// Linear interpolation between nodes; zero outside the grid.
    pub fn evaluate(&self, x: f64) -> f64 {
        let pos = (x - self.grid.origin()) / self.grid.spacing();
        if !(pos >= 0.0) || pos > (self.grid.count() - 1) as f64 {
            return 0.0;
        }
        let i = (pos.floor() as usize).min(self.grid.count() - 2);
        let frac = pos - i as f64;
        self.density[i] * (1.0 - frac) + self.density[i + 1] * frac
    }

    fn check(&self) -> Result<()> {
        let mass = self.mass();
        if self.density.iter().any(|d| *d < 0.0 || !d.is_finite()) || !(0.99..=1.01).contains(&mass) {
            return Err(HdmiError::Numeric(format!("1D density failed normalization (mass {mass})")));
        }
        Ok(())
    }
}

/// Density values on a 2D grid, row-major with rows along `grid.axis_y`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid2D {
    pub grid: Grid2D,
    pub density: Vec<f64>,
}

impl DensityGrid2D {
    pub fn rows(&self) -> usize {
        self.grid.axis_y.count()
    }

    pub fn cols(&self) -> usize {
        self.grid.axis_x.count()
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.density[r * self.cols() + c]
    }

    pub fn cell_area(&self) -> f64 {
        self.grid.axis_y.spacing() * self.grid.axis_x.spacing()
    }

    pub fn mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.cell_area()
    }

    /// Bilinear interpolation; zero outside the grid.
    pub fn evaluate(&self, y: f64, x: f64) -> f64 {
        let (gy, gx) = (self.grid.axis_y, self.grid.axis_x);
        let py = (y - gy.origin()) / gy.spacing();
        let px = (x - gx.origin()) / gx.spacing();
        if !(py >= 0.0 && px >= 0.0) || py > (gy.count() - 1) as f64 || px > (gx.count() - 1) as f64 {
            return 0.0;
        }
        let r = (py.floor() as usize).min(gy.count() - 2);
        let c = (px.floor() as usize).min(gx.count() - 2);
        let (fy, fx) = (py - r as f64, px - c as f64);
        self.at(r, c) * (1.0 - fy) * (1.0 - fx)
            + self.at(r, c + 1) * (1.0 - fy) * fx
            + self.at(r + 1, c) * fy * (1.0 - fx)
            + self.at(r + 1, c + 1) * fy * fx
    }

    /// Marginal along the row axis, `sum_c f(r, c) dx`.
    pub fn marginal_y(&self) -> Vec<f64> {
        let dx = self.grid.axis_x.spacing();
        self.density.chunks(self.cols()).map(|row| row.iter().sum::<f64>() * dx).collect()
    }

    /// Marginal along the column axis, `sum_r f(r, c) dy`.
    pub fn marginal_x(&self) -> Vec<f64> {
        let dy = self.grid.axis_y.spacing();
        let mut out = vec![0.0; self.cols()];
        for row in self.density.chunks(self.cols()) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out.iter_mut().for_each(|o| *o *= dy);
        out
    }

    fn check(&self) -> Result<()> {
        let mass = self.mass();
        if self.density.iter().any(|d| *d < 0.0 || !d.is_finite()) || !(0.98..=1.02).contains(&mass) {
            return Err(HdmiError::Numeric(format!("2D density failed normalization (mass {mass})")));
        }
        Ok(())
    }
}

/// Position of `x` in grid units, tolerating round-off at the end nodes.
fn grid_position(x: f64, grid: &Grid1D) -> Option<(usize, f64)> {
    let pos = (x - grid.origin()) / grid.spacing();
    let last = (grid.count() - 1) as f64;
    let eps = 1e-9 * last.max(1.0);
    if !(pos >= -eps && pos <= last + eps) {
        return None;
    }
    let pos = pos.clamp(0.0, last);
    let i = (pos.floor() as usize).min(grid.count() - 2);
    Some((i, pos - i as f64))
}

/// Splits each point's mass between its two flanking nodes in proportion to
/// proximity. Mass defaults to `1/N` per point.
pub fn linear_binning(data: &[f64], grid: &Grid1D, weights: Option<&[f64]>) -> Result<Vec<f64>> {
    if let Some(w) = weights {
        if w.len() != data.len() {
            return Err(HdmiError::invalid("weights and data differ in length"));
        }
    }
    let default = 1.0 / data.len() as f64;
    let mut out = vec![0.0; grid.count()];
    for (j, &x) in data.iter().enumerate() {
        let (i, frac) = grid_position(x, grid).ok_or_else(|| {
            HdmiError::invalid(format!(
                "value {x} lies outside the grid [{}, {}]",
                grid.origin(),
                grid.last()
            ))
        })?;
        let m = weights.map_or(default, |w| w[j]);
        out[i] += m * (1.0 - frac);
        out[i + 1] += m * frac;
    }
    Ok(out)
}

/// Bilinear binning of paired samples; row axis `grid.axis_y`.
pub(crate) fn linear_binning_2d(y: &[f64], x: &[f64], grid: &Grid2D, out: &mut Vec<f64>) -> Result<()> {
    let cols = grid.axis_x.count();
    out.clear();
    out.resize(grid.axis_y.count() * cols, 0.0);
    let m = 1.0 / y.len() as f64;
    for (&yv, &xv) in y.iter().zip(x) {
        let (r, fy) = grid_position(yv, &grid.axis_y)
            .ok_or_else(|| HdmiError::invalid(format!("value {yv} lies outside the row grid")))?;
        let (c, fx) = grid_position(xv, &grid.axis_x)
            .ok_or_else(|| HdmiError::invalid(format!("value {xv} lies outside the column grid")))?;
        out[r * cols + c] += m * (1.0 - fy) * (1.0 - fx);
        out[r * cols + c + 1] += m * (1.0 - fy) * fx;
        out[(r + 1) * cols + c] += m * fy * (1.0 - fx);
        out[(r + 1) * cols + c + 1] += m * fy * fx;
    }
    Ok(())
}

fn check_sample(data: &[f64], axis: &str) -> Result<(f64, f64)> {
    if data.iter().any(|v| !v.is_finite()) {
        return Err(HdmiError::invalid(format!("{axis} contains non-finite values")));
    }
    let (lo, hi) = stats::min_max(data);
    if !(hi > lo) {
        return Err(HdmiError::degenerate(format!("{axis} needs at least two distinct values")));
    }
    Ok((lo, hi))
}

/// Grid over the data range widened by one kernel support on each side.
pub(crate) fn cushioned_grid(lo: f64, hi: f64, kernel: Kernel, h: Bandwidth, count: usize) -> Result<Grid1D> {
    let cushion = kernel.support_radius() * h.value();
    Grid1D::spanning(lo - cushion, hi + cushion, count)
}

/// 1D estimate on a caller-supplied grid that must cover the data and the
/// kernel support around it.
pub(crate) fn kde_1d_on_grid(data: &[f64], kernel: Kernel, h: Bandwidth, grid: Grid1D) -> Result<DensityGrid1D> {
    let dx = grid.spacing();
    let mut binned = linear_binning(data, &grid, None)?;
    binned.iter_mut().for_each(|b| *b /= dx);
    let (taps, half) = kernel.sampled(h.value(), dx);
    let mut density = convolve_grid(GridView::one_d(&binned, dx), GridView::one_d(&taps, dx).centered_at([0, half]))?;
    density.iter_mut().for_each(|d| *d = d.max(0.0));
    let out = DensityGrid1D { grid, density };
    out.check()?;
    Ok(out)
}

pub fn kde_1d(data: &[f64], kernel: Kernel, bandwidth: Bandwidth, grid_size: usize) -> Result<DensityGrid1D> {
    if grid_size < 2 || !grid_size.is_power_of_two() {
        return Err(HdmiError::invalid(format!("grid size must be a power of two, got {grid_size}")));
    }
    let (lo, hi) = check_sample(data, "data")?;
    let grid = cushioned_grid(lo, hi, kernel, bandwidth, grid_size)?;
    kde_1d_on_grid(data, kernel, bandwidth, grid)
}

/// Per-worker buffers for repeated joint estimates.
#[derive(Default)]
pub(crate) struct Kde2dWorkspace {
    convolver: Option<SeparableConvolver>,
    binned: Vec<f64>,
}

impl Kde2dWorkspace {
    fn convolver(&mut self, rows: usize, cols: usize) -> &mut SeparableConvolver {
        if self.convolver.as_ref().map(SeparableConvolver::shape) != Some((rows, cols)) {
            self.convolver = Some(SeparableConvolver::new(rows, cols));
        }
        self.convolver.as_mut().expect("convolver just created")
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct AxisSample<'a> {
    pub data: &'a [f64],
    pub lo: f64,
    pub hi: f64,
    pub bandwidth: Bandwidth,
}

impl<'a> AxisSample<'a> {
    pub(crate) fn new(data: &'a [f64], bandwidth: Bandwidth, axis: &str) -> Result<Self> {
        let (lo, hi) = check_sample(data, axis)?;
        Ok(AxisSample { data, lo, hi, bandwidth })
    }
}

pub(crate) fn kde_2d_with(
    ws: &mut Kde2dWorkspace,
    y: AxisSample<'_>,
    x: AxisSample<'_>,
    kernel: Kernel,
    grid_size: usize,
) -> Result<DensityGrid2D> {
    if y.data.len() != x.data.len() {
        return Err(HdmiError::invalid(format!(
            "paired samples differ in length ({} vs {})",
            y.data.len(),
            x.data.len()
        )));
    }
    let grid = Grid2D {
        axis_y: cushioned_grid(y.lo, y.hi, kernel, y.bandwidth, grid_size)?,
        axis_x: cushioned_grid(x.lo, x.hi, kernel, x.bandwidth, grid_size)?,
    };
    let (dy, dx) = (grid.axis_y.spacing(), grid.axis_x.spacing());
    let mut binned = std::mem::take(&mut ws.binned);
    linear_binning_2d(y.data, x.data, &grid, &mut binned)?;
    let cell = dy * dx;
    binned.iter_mut().for_each(|b| *b /= cell);

    let (ky, cy) = kernel.sampled(y.bandwidth.value(), dy);
    let (kx, cx) = kernel.sampled(x.bandwidth.value(), dx);
    let rows = (grid_size + ky.len() - 1).next_power_of_two();
    let cols = (grid_size + kx.len() - 1).next_power_of_two();
    let mut density = Vec::with_capacity(grid_size * grid_size);
    ws.convolver(rows, cols).convolve(&binned, grid_size, grid_size, &ky, cy, &kx, cx, cell, &mut density);
    ws.binned = binned;
    density.iter_mut().for_each(|d| *d = d.max(0.0));
    let out = DensityGrid2D { grid, density };
    out.check()?;
    Ok(out)
}

/// Joint density of `(data_y, data_x)` with a diagonal bandwidth.
pub fn kde_2d(
    data_y: &[f64],
    data_x: &[f64],
    kernel: Kernel,
    bandwidth_y: Bandwidth,
    bandwidth_x: Bandwidth,
    grid_size: usize,
) -> Result<DensityGrid2D> {
    if grid_size < 2 || !grid_size.is_power_of_two() {
        return Err(HdmiError::invalid(format!("grid size must be a power of two, got {grid_size}")));
    }
    let y = AxisSample::new(data_y, bandwidth_y, "y")?;
    let x = AxisSample::new(data_x, bandwidth_x, "x")?;
    kde_2d_with(&mut Kde2dWorkspace::default(), y, x, kernel, grid_size)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernels_integrate_to_one() {
        for k in [Kernel::Epanechnikov, Kernel::Gaussian] {
            let r = k.support_radius();
            let n = 200_000;
            let du = 2.0 * r / n as f64;
            let mass: f64 = (0..n).map(|i| k.eval(-r + (i as f64 + 0.5) * du) * du).sum();
            assert!((mass - 1.0).abs() < 1e-4, "{k:?}: {mass}");
        }
        assert_eq!(Kernel::Epanechnikov.eval(1.5), 0.0);
        assert_eq!(Kernel::Epanechnikov.eval(0.0), 0.75);
    }

    #[test]
    fn binning_on_node_and_midpoint() {
        let grid = Grid1D::new(0.0, 1.0, 4).unwrap();
        let b = linear_binning(&[2.0], &grid, None).unwrap();
        assert_eq!(b, vec![0.0, 0.0, 1.0, 0.0]);
        let b = linear_binning(&[1.5], &grid, None).unwrap();
        assert_eq!(b, vec![0.0, 0.5, 0.5, 0.0]);
        let b = linear_binning(&[3.0], &grid, None).unwrap();
        assert_eq!(b, vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn binning_rejects_outside() {
        let grid = Grid1D::new(0.0, 1.0, 4).unwrap();
        assert!(linear_binning(&[3.5], &grid, None).is_err());
        assert!(linear_binning(&[-0.1], &grid, None).is_err());
    }

    #[test]
    fn weighted_binning() {
        let grid = Grid1D::new(0.0, 1.0, 3).unwrap();
        let b = linear_binning(&[0.25, 2.0], &grid, Some(&[2.0, 1.0])).unwrap();
        assert_eq!(b, vec![1.5, 0.5, 1.0]);
    }

    #[test]
    fn sampled_kernel_has_unit_mass() {
        for k in [Kernel::Epanechnikov, Kernel::Gaussian] {
            for (h, dx) in [(1.0, 0.1), (0.3, 0.07), (0.01, 0.1)] {
                let (taps, half) = k.sampled(h, dx);
                assert_eq!(taps.len(), 2 * half + 1);
                assert!((taps.iter().sum::<f64>() * dx - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_inputs() {
        let h = Bandwidth::new(0.5).unwrap();
        assert!(kde_1d(&[1.0; 10], Kernel::Gaussian, h, 1024).is_err());
        assert!(kde_1d(&[1.0, 2.0], Kernel::Gaussian, h, 1000).is_err());
        assert!(kde_2d(&[1.0, 2.0], &[1.0, 2.0, 3.0], Kernel::Gaussian, h, h, 64).is_err());
        assert!(kde_2d(&[1.0, 2.0], &[1.0, 1.0], Kernel::Gaussian, h, h, 64).is_err());
        assert!(Bandwidth::new(0.0).is_err());
        assert!(Bandwidth::new(f64::NAN).is_err());
    }
}
