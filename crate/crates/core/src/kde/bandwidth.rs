//! Bandwidth selectors: the normal-reference rule of thumb and the Improved
//! Sheather-Jones plug-in (fixed point on the DCT of the binned data).

use std::f64::consts::PI;

use crate::error::{HdmiError, Result};
use crate::fft::{self, Complex64, Direction, Grid1D};
use crate::kde::{linear_binning, Kernel};
use crate::stats;

/// Smoothing bandwidth in data units.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Bandwidth(f64);

impl Bandwidth {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Bandwidth(value))
        } else {
            Err(HdmiError::invalid(format!("bandwidth must be positive and finite, got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthRule {
    Isj,
    Silverman,
}

/// Result of ISJ selection. `fallback` is set when the fixed-point root could
/// not be bracketed and the rule of thumb was returned instead.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsjBandwidth {
    pub bandwidth: Bandwidth,
    pub fallback: bool,
}

/// Default number of DCT nodes for ISJ.
pub const ISJ_GRID_SIZE: usize = 1024;

fn sorted_finite(data: &[f64]) -> Result<Vec<f64>> {
    if data.iter().any(|v| !v.is_finite()) {
        return Err(HdmiError::invalid("bandwidth selection needs finite data"));
    }
    let sorted = stats::sorted_copy(data);
    if stats::count_distinct_sorted(&sorted) < 2 {
        return Err(HdmiError::degenerate("bandwidth selection needs at least two distinct values"));
    }
    Ok(sorted)
}

fn silverman_sorted(sorted: &[f64]) -> Result<Bandwidth> {
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let sd = (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let iqr = stats::quantile_sorted(sorted, 0.75) - stats::quantile_sorted(sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    Bandwidth::new(0.9 * spread * n.powf(-0.2))
}

/// Rule of thumb `0.9 * min(sd, IQR/1.34) * n^(-1/5)`; `sd` uses the `n - 1`
/// denominator and the quartiles are linearly interpolated.
pub fn bandwidth_silverman(data: &[f64]) -> Result<Bandwidth> {
    silverman_sorted(&sorted_finite(data)?)
}

/// Improved Sheather-Jones bandwidth for a Gaussian kernel.
///
/// The data are linearly binned on `grid_size` nodes spanning the range
/// padded by a tenth on each side, then the functional-estimation cascade is
/// solved for its fixed point `t*`; the bandwidth is `sqrt(t*) * range`.
pub fn bandwidth_isj(data: &[f64], grid_size: usize) -> Result<IsjBandwidth> {
    if grid_size < 256 || !grid_size.is_power_of_two() {
        return Err(HdmiError::invalid(format!(
            "ISJ grid size must be a power of two >= 256, got {grid_size}"
        )));
    }
    let sorted = sorted_finite(data)?;
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let range = hi - lo;
    let grid = Grid1D::spanning(lo - range / 10.0, hi + range / 10.0, grid_size)?;
    let span = grid.last() - grid.origin();

    let mut hist = linear_binning(&sorted, &grid, None)?;
    let total: f64 = hist.iter().sum();
    hist.iter_mut().for_each(|h| *h /= total);

    let coeffs = dct_ii(&hist)?;
    let a2: Vec<f64> = coeffs[1..].iter().map(|a| a * a).collect();
    let distinct = stats::count_distinct_sorted(&sorted) as f64;
    let fixed = FixedPoint { n: distinct, a2: &a2 };

    match fixed.solve() {
        Some(t) if t > 0.0 => Ok(IsjBandwidth { bandwidth: Bandwidth::new(t.sqrt() * span)?, fallback: false }),
        _ => Ok(IsjBandwidth { bandwidth: silverman_sorted(&sorted)?, fallback: true }),
    }
}

/// Bandwidth for `kernel` from the chosen rule. Both rules target a Gaussian
/// kernel; for Epanechnikov the result is scaled by the canonical-bandwidth
/// ratio so the amount of smoothing matches.
pub fn select_bandwidth(data: &[f64], rule: BandwidthRule, kernel: Kernel) -> Result<(Bandwidth, bool)> {
    let (gauss, fallback) = match rule {
        BandwidthRule::Isj => {
            let b = bandwidth_isj(data, ISJ_GRID_SIZE)?;
            (b.bandwidth, b.fallback)
        }
        BandwidthRule::Silverman => (bandwidth_silverman(data)?, false),
    };
    Ok((Bandwidth::new(gauss.value() * kernel.gaussian_equivalent_scale())?, fallback))
}

/// `y_k = sum_j x_j cos(pi k (2j + 1) / 2n)` via one complex FFT of the
/// even/odd reordered input.
pub(crate) fn dct_ii(x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    let mut v = vec![Complex64::default(); n];
    for (i, slot) in v.iter_mut().enumerate() {
        let src = if i < n.div_ceil(2) { 2 * i } else { 2 * (n - i) - 1 };
        *slot = Complex64::new(x[src], 0.0);
    }
    let spec = fft::fft_1d(&v, Direction::Forward)?;
    Ok(spec
        .iter()
        .enumerate()
        .map(|(k, z)| (Complex64::from_polar(1.0, -PI * k as f64 / (2.0 * n as f64)) * z).re)
        .collect())
}

struct FixedPoint<'a> {
    n: f64,
    a2: &'a [f64],
}

impl FixedPoint<'_> {
    const ORDER: i32 = 7;

    /// `2 pi^(2s) sum_k k^(2s) a2_k exp(-k^2 pi^2 t)`
    fn functional(&self, s: i32, t: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &a) in self.a2.iter().enumerate() {
            let k2 = ((i + 1) * (i + 1)) as f64;
            let e = -k2 * PI * PI * t;
            if e < -745.0 {
                break;
            }
            acc += k2.powi(s) * a * e.exp();
        }
        2.0 * PI.powi(2 * s) * acc
    }

    fn eval(&self, t: f64) -> f64 {
        let mut f = self.functional(Self::ORDER, t);
        for s in (2..Self::ORDER).rev() {
            let k0 = (1..2 * s).step_by(2).map(f64::from).product::<f64>() / (2.0 * PI).sqrt();
            let c = (1.0 + 0.5f64.powf(s as f64 + 0.5)) / 3.0;
            let time = (2.0 * c * k0 / self.n / f).powf(2.0 / (3.0 + 2.0 * s as f64));
            f = self.functional(s, time);
        }
        t - (2.0 * self.n * PI.sqrt() * f).powf(-0.4)
    }

    /// Brackets the root starting from a sample-size dependent interval,
    /// doubling up to 0.1.
    fn solve(&self) -> Option<f64> {
        let n = self.n.clamp(50.0, 1050.0);
        let mut tol = 1e-12 + 0.01 * (n - 50.0) / 1000.0;
        let f0 = self.eval(0.0);
        if !f0.is_finite() {
            return None;
        }
        loop {
            let f1 = self.eval(tol);
            if f1.is_finite() && f0.signum() != f1.signum() {
                return brent(|t| self.eval(t), 0.0, tol, f0, f1);
            }
            if tol >= 0.1 {
                return None;
            }
            tol = (tol * 2.0).min(0.1);
        }
    }
}

/// Brent's root finder on a sign-changing bracket.
fn brent(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> Option<f64> {
    const XTOL: f64 = 1e-14;
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * XTOL;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Some(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return None;
        }
    }
    Some(b)
}
