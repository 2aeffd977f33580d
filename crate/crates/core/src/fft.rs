//! Discrete Fourier transforms and FFT-based convolution on equispaced grids.
//!
//! Normalization: the forward transform is unnormalized,
//! `X_k = sum_j x_j exp(-2 pi i jk / N)`, and the inverse carries the `1/N`
//! factor. Any length is accepted; fast paths come from the mixed-radix
//! planner behind [`fft_1d`].

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

pub use rustfft::num_complex::Complex64;

use crate::error::{HdmiError, Result};

/// Largest length accepted by the O(N^2) reference transform.
pub const DFT_DIRECT_MAX_LEN: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, direction: Direction) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        match direction {
            Direction::Forward => p.plan_fft_forward(len),
            Direction::Inverse => p.plan_fft_inverse(len),
        }
    })
}

/// Equispaced one-dimensional grid: node `i` sits at `origin + i * spacing`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    origin: f64,
    spacing: f64,
    count: usize,
}

impl Grid1D {
    pub fn new(origin: f64, spacing: f64, count: usize) -> Result<Self> {
        if !origin.is_finite() || !spacing.is_finite() || spacing <= 0.0 {
            return Err(HdmiError::invalid(format!(
                "grid needs finite origin and positive spacing (origin {origin}, spacing {spacing})"
            )));
        }
        if count < 2 {
            return Err(HdmiError::invalid(format!("grid needs at least 2 nodes, got {count}")));
        }
        Ok(Grid1D { origin, spacing, count })
    }

    /// Grid with `count` nodes whose first and last nodes are `lo` and `hi`.
    pub fn spanning(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count < 2 || !(hi > lo) {
            return Err(HdmiError::invalid(format!(
                "cannot span [{lo}, {hi}] with {count} nodes"
            )));
        }
        Grid1D::new(lo, (hi - lo) / (count - 1) as f64, count)
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn point(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    pub fn last(&self) -> f64 {
        self.point(self.count - 1)
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |i| self.point(i))
    }
}

/// Tensor-product grid; rows run along `axis_y`, columns along `axis_x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2D {
    pub axis_y: Grid1D,
    pub axis_x: Grid1D,
}

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(HdmiError::invalid(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    /// Builds a matrix from nested rows, rejecting ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(HdmiError::invalid("non-rectangular 2D input"));
        }
        let data = rows.iter().flatten().map(|&v| Complex64::new(v, 0.0)).collect();
        ComplexMatrix::new(rows.len(), cols, data)
    }

    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        ComplexMatrix::new(rows, cols, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }
}

fn check_finite(signal: &[Complex64]) -> Result<()> {
    if signal.is_empty() {
        return Err(HdmiError::invalid("transform input is empty"));
    }
    if signal.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(HdmiError::invalid("transform input contains non-finite values"));
    }
    Ok(())
}

/// Transforms every consecutive `len`-chunk of `buf` in place, unnormalized.
fn transform_chunks(buf: &mut [Complex64], len: usize, direction: Direction) {
    let fft = plan(len, direction);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(buf, &mut scratch);
}

fn scale(buf: &mut [Complex64], factor: f64) {
    for z in buf {
        *z *= factor;
    }
}

/// One-dimensional DFT of any positive length.
pub fn fft_1d(signal: &[Complex64], direction: Direction) -> Result<Vec<Complex64>> {
    check_finite(signal)?;
    let mut out = signal.to_vec();
    let n = out.len();
    transform_chunks(&mut out, n, direction);
    if direction == Direction::Inverse {
        scale(&mut out, 1.0 / n as f64);
    }
    Ok(out)
}

/// Reference transform by explicit multiplication with the DFT matrix.
/// Test oracle only; lengths above [`DFT_DIRECT_MAX_LEN`] are refused.
pub fn dft_direct(signal: &[Complex64], direction: Direction) -> Result<Vec<Complex64>> {
    check_finite(signal)?;
    let n = signal.len();
    if n > DFT_DIRECT_MAX_LEN {
        return Err(HdmiError::invalid(format!(
            "direct DFT limited to {DFT_DIRECT_MAX_LEN} points, got {n}"
        )));
    }
    let sign = match direction {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };
    let norm = match direction {
        Direction::Forward => 1.0,
        Direction::Inverse => 1.0 / n as f64,
    };
    let out = (0..n)
        .map(|k| {
            let acc: Complex64 = signal
                .iter()
                .enumerate()
                .map(|(j, &x)| {
                    // reduce jk mod n first so the angle stays small
                    let phase = ((j * k) % n) as f64 / n as f64;
                    x * Complex64::from_polar(1.0, sign * 2.0 * std::f64::consts::PI * phase)
                })
                .sum();
            acc * norm
        })
        .collect();
    Ok(out)
}

fn transpose(src: &[Complex64], rows: usize, cols: usize, dst: &mut [Complex64]) {
    const BLOCK: usize = 32;
    for rb in (0..rows).step_by(BLOCK) {
        for cb in (0..cols).step_by(BLOCK) {
            for r in rb..(rb + BLOCK).min(rows) {
                for c in cb..(cb + BLOCK).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Separable 2D DFT: rows first, then columns.
pub fn fft_2d(values: &ComplexMatrix, direction: Direction) -> Result<ComplexMatrix> {
    let (rows, cols) = (values.rows, values.cols);
    if rows < 2 || cols < 2 {
        return Err(HdmiError::invalid(format!(
            "2D transform needs both dimensions >= 2, got {rows}x{cols}"
        )));
    }
    check_finite(&values.data)?;
    let mut buf = values.data.clone();
    transform_chunks(&mut buf, cols, direction);
    let mut t = vec![Complex64::default(); rows * cols];
    transpose(&buf, rows, cols, &mut t);
    transform_chunks(&mut t, rows, direction);
    transpose(&t, cols, rows, &mut buf);
    if direction == Direction::Inverse {
        scale(&mut buf, 1.0 / (rows * cols) as f64);
    }
    ComplexMatrix::new(rows, cols, buf)
}

/// Shape of a sampled grid array.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dims {
    One(usize),
    Two { rows: usize, cols: usize },
}

impl Dims {
    fn len(self) -> usize {
        match self {
            Dims::One(n) => n,
            Dims::Two { rows, cols } => rows * cols,
        }
    }

    fn extents(self) -> (usize, usize) {
        match self {
            Dims::One(n) => (1, n),
            Dims::Two { rows, cols } => (rows, cols),
        }
    }
}

/// Borrowed samples on an equispaced grid.
///
/// `spacing` is `[row axis, column axis]`; one-dimensional arrays use only the
/// column entry. `origin` is the index of the node at offset zero, which is
/// what places a centred kernel; data arrays leave it at zero.
#[derive(Clone, Copy, Debug)]
pub struct GridView<'a> {
    pub values: &'a [f64],
    pub dims: Dims,
    pub spacing: [f64; 2],
    pub origin: [usize; 2],
}

impl<'a> GridView<'a> {
    pub fn one_d(values: &'a [f64], spacing: f64) -> Self {
        GridView { values, dims: Dims::One(values.len()), spacing: [spacing, spacing], origin: [0, 0] }
    }

    pub fn two_d(values: &'a [f64], rows: usize, cols: usize, spacing: [f64; 2]) -> Self {
        GridView { values, dims: Dims::Two { rows, cols }, spacing, origin: [0, 0] }
    }

    pub fn centered_at(mut self, origin: [usize; 2]) -> Self {
        self.origin = origin;
        self
    }
}

fn spacing_matches(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

/// Linear convolution of `values` with `kernel` through zero-padded FFTs.
///
/// The result has the extent of `values`; entry `i` is the full linear
/// convolution at `i + kernel.origin`, multiplied by the cell area so it
/// approximates the continuous convolution integral.
pub fn convolve_grid(values: GridView<'_>, kernel: GridView<'_>) -> Result<Vec<f64>> {
    let one_d = matches!(values.dims, Dims::One(_));
    if one_d != matches!(kernel.dims, Dims::One(_)) {
        return Err(HdmiError::invalid("values and kernel must have the same dimensionality"));
    }
    for (label, g) in [("values", &values), ("kernel", &kernel)] {
        if g.values.len() != g.dims.len() || g.values.is_empty() {
            return Err(HdmiError::invalid(format!("{label} length does not match its shape")));
        }
        if g.values.iter().any(|v| !v.is_finite()) {
            return Err(HdmiError::invalid(format!("{label} contain non-finite entries")));
        }
    }
    let axes = if one_d { 1..2 } else { 0..2 };
    for a in axes.clone() {
        if !(values.spacing[a] > 0.0) || !spacing_matches(values.spacing[a], kernel.spacing[a]) {
            return Err(HdmiError::invalid(format!(
                "grid spacing mismatch: values {} vs kernel {}",
                values.spacing[a], kernel.spacing[a]
            )));
        }
    }
    let cell: f64 = axes.map(|a| values.spacing[a]).product();

    let (vr, vc) = values.dims.extents();
    let (kr, kc) = kernel.dims.extents();
    let pr = if one_d { 1 } else { (vr + kr - 1).next_power_of_two() };
    let pc = (vc + kc - 1).next_power_of_two();

    let pad = |g: &GridView<'_>, rows: usize, cols: usize| {
        let mut buf = vec![Complex64::default(); pr * pc];
        for r in 0..rows {
            for c in 0..cols {
                buf[r * pc + c] = Complex64::new(g.values[r * cols + c], 0.0);
            }
        }
        buf
    };
    let mut sig = pad(&values, vr, vc);
    let mut ker = pad(&kernel, kr, kc);
    let fwd = |buf: &mut Vec<Complex64>| {
        transform_chunks(buf, pc, Direction::Forward);
        if pr > 1 {
            let mut t = vec![Complex64::default(); pr * pc];
            transpose(buf, pr, pc, &mut t);
            transform_chunks(&mut t, pr, Direction::Forward);
            transpose(&t, pc, pr, buf);
        }
    };
    fwd(&mut sig);
    fwd(&mut ker);
    for (s, k) in sig.iter_mut().zip(&ker) {
        *s *= *k;
    }
    if pr > 1 {
        let mut t = vec![Complex64::default(); pr * pc];
        transpose(&sig, pr, pc, &mut t);
        transform_chunks(&mut t, pr, Direction::Inverse);
        transpose(&t, pc, pr, &mut sig);
    }
    transform_chunks(&mut sig, pc, Direction::Inverse);

    let norm = cell / (pr * pc) as f64;
    let (or, oc) = if one_d { (0, kernel.origin[1]) } else { (kernel.origin[0], kernel.origin[1]) };
    let mut out = Vec::with_capacity(vr * vc);
    for r in 0..vr {
        for c in 0..vc {
            let (sr, sc) = (r + or, c + oc);
            let v = if sr < pr && sc < pc { sig[sr * pc + sc].re * norm } else { 0.0 };
            out.push(v);
        }
    }
    Ok(out)
}

/// Linear convolution of many real lines with one real kernel, two lines per
/// complex transform (real part and imaginary part stay independent because
/// the kernel is real).
struct LinePass {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    kernel: Vec<Complex64>,
    buf: Vec<Complex64>,
}

impl LinePass {
    fn new(len: usize) -> Self {
        LinePass {
            fwd: plan(len, Direction::Forward),
            inv: plan(len, Direction::Inverse),
            kernel: vec![Complex64::default(); len],
            buf: vec![Complex64::default(); len],
        }
    }

    fn scratch_len(&self) -> usize {
        self.fwd.get_inplace_scratch_len().max(self.inv.get_inplace_scratch_len())
    }

    fn set_kernel(&mut self, taps: &[f64], scratch: &mut [Complex64]) {
        self.kernel.iter_mut().for_each(|z| *z = Complex64::default());
        for (d, &s) in self.kernel.iter_mut().zip(taps) {
            d.re = s;
        }
        self.fwd.process_with_scratch(&mut self.kernel, scratch);
    }

    /// Convolves lines `a` and `b` (each `n` long, read through `get`) and
    /// hands entry `i` of the unnormalized results, shifted by `centre`, to
    /// `put(i, a_i, b_i)`.
    fn run(
        &mut self,
        n: usize,
        centre: usize,
        get: impl Fn(usize) -> (f64, f64),
        mut put: impl FnMut(usize, f64, f64),
        scratch: &mut [Complex64],
    ) {
        for (i, z) in self.buf.iter_mut().enumerate() {
            *z = if i < n {
                let (a, b) = get(i);
                Complex64::new(a, b)
            } else {
                Complex64::default()
            };
        }
        self.fwd.process_with_scratch(&mut self.buf, scratch);
        for (z, k) in self.buf.iter_mut().zip(&self.kernel) {
            *z *= k;
        }
        self.inv.process_with_scratch(&mut self.buf, scratch);
        for i in 0..n {
            let z = self.buf[i + centre];
            put(i, z.re, z.im);
        }
    }
}

/// Reusable plans and buffers for repeated separable 2D convolutions of a
/// fixed padded size. Each screening worker owns one.
pub(crate) struct SeparableConvolver {
    rows: usize,
    cols: usize,
    along_rows: LinePass,
    along_cols: LinePass,
    scratch: Vec<Complex64>,
    partial: Vec<f64>,
}

impl SeparableConvolver {
    /// `rows` and `cols` are the padded transform lengths along the column
    /// and row directions.
    pub(crate) fn new(rows: usize, cols: usize) -> Self {
        let along_rows = LinePass::new(cols);
        let along_cols = LinePass::new(rows);
        let scratch = vec![Complex64::default(); along_rows.scratch_len().max(along_cols.scratch_len())];
        SeparableConvolver { rows, cols, along_rows, along_cols, scratch, partial: Vec::new() }
    }

    pub(crate) fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Convolves the `vr x vc` row-major `values` with the product kernel
    /// `ky[r] * kx[c]` (centred at `cy`, `cx`) and writes the result, scaled by
    /// `cell`, over the original extent into `out`.
    ///
    /// Rows are smoothed with `kx` first, then columns with `ky`.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn convolve(
        &mut self,
        values: &[f64],
        vr: usize,
        vc: usize,
        ky: &[f64],
        cy: usize,
        kx: &[f64],
        cx: usize,
        cell: f64,
        out: &mut Vec<f64>,
    ) {
        debug_assert!(vr + ky.len() - 1 <= self.rows && vc + kx.len() - 1 <= self.cols);
        self.along_rows.set_kernel(kx, &mut self.scratch);
        self.along_cols.set_kernel(ky, &mut self.scratch);

        let partial = &mut self.partial;
        partial.clear();
        partial.resize(vr * vc, 0.0);
        let is_zero = |r: usize| r >= vr || values[r * vc..(r + 1) * vc].iter().all(|&v| v == 0.0);
        for r in (0..vr).step_by(2) {
            let r2 = r + 1;
            if is_zero(r) && is_zero(r2) {
                continue;
            }
            let row = |rr: usize, c: usize| if rr < vr { values[rr * vc + c] } else { 0.0 };
            self.along_rows.run(
                vc,
                cx,
                |c| (row(r, c), row(r2, c)),
                |c, a, b| {
                    partial[r * vc + c] = a;
                    if r2 < vr {
                        partial[r2 * vc + c] = b;
                    }
                },
                &mut self.scratch,
            );
        }

        let norm = cell / (self.rows * self.cols) as f64;
        out.clear();
        out.resize(vr * vc, 0.0);
        for c in (0..vc).step_by(2) {
            let c2 = c + 1;
            let partial = &self.partial;
            let col = |cc: usize, r: usize| if cc < vc { partial[r * vc + cc] } else { 0.0 };
            self.along_cols.run(
                vr,
                cy,
                |r| (col(c, r), col(c2, r)),
                |r, a, b| {
                    out[r * vc + c] = a * norm;
                    if c2 < vc {
                        out[r * vc + c2] = b * norm;
                    }
                },
                &mut self.scratch,
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn impulse_and_constant() {
        let spec = fft_1d(&[c(1.0), c(0.0), c(0.0), c(0.0)], Direction::Forward).unwrap();
        assert!(max_err(&spec, &[c(1.0); 4]) < 1e-15);
        let spec = fft_1d(&[c(1.0); 4], Direction::Forward).unwrap();
        assert!(max_err(&spec, &[c(4.0), c(0.0), c(0.0), c(0.0)]) < 1e-15);
    }

    #[test]
    fn two_point_direct() {
        let out = dft_direct(&[c(1.0), c(0.0)], Direction::Forward).unwrap();
        assert!(max_err(&out, &[c(1.0), c(1.0)]) < 1e-15);
        let out = dft_direct(&[c(1.0), c(-1.0)], Direction::Forward).unwrap();
        assert!(max_err(&out, &[c(0.0), c(2.0)]) < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fft_1d(&[], Direction::Forward).is_err());
        assert!(fft_1d(&[c(f64::NAN)], Direction::Forward).is_err());
        assert!(dft_direct(&vec![c(0.0); DFT_DIRECT_MAX_LEN + 1], Direction::Forward).is_err());
        assert!(ComplexMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        let m = ComplexMatrix::from_real(1, 4, &[1.0; 4]).unwrap();
        assert!(fft_2d(&m, Direction::Forward).is_err());
    }

    #[test]
    fn two_d_dc_and_impulse() {
        let ones = ComplexMatrix::from_real(2, 2, &[1.0; 4]).unwrap();
        let s = fft_2d(&ones, Direction::Forward).unwrap();
        assert!((s.get(0, 0) - c(4.0)).norm() < 1e-15);
        for (r, cc) in [(0, 1), (1, 0), (1, 1)] {
            assert!(s.get(r, cc).norm() < 1e-15);
        }
        let mut v = vec![0.0; 16];
        v[0] = 1.0;
        let s = fft_2d(&ComplexMatrix::from_real(4, 4, &v).unwrap(), Direction::Forward).unwrap();
        assert!(max_err(s.as_slice(), &[c(1.0); 16]) < 1e-15);
    }

    #[test]
    fn delta_kernel_is_identity() {
        let out = convolve_grid(GridView::one_d(&[0.0, 1.0, 0.0], 1.0), GridView::one_d(&[1.0], 1.0)).unwrap();
        for (o, e) in out.iter().zip([0.0, 1.0, 0.0]) {
            assert!((o - e).abs() < 1e-15);
        }
    }

    #[test]
    fn two_tap_kernel_leading_entries() {
        let out =
            convolve_grid(GridView::one_d(&[1.0, 0.0, 0.0, 0.0], 1.0), GridView::one_d(&[0.5, 0.5], 1.0)).unwrap();
        for (o, e) in out.iter().zip([0.5, 0.5, 0.0, 0.0]) {
            assert!((o - e).abs() < 1e-15);
        }
    }

    #[test]
    fn spacing_mismatch_rejected() {
        let err = convolve_grid(GridView::one_d(&[1.0, 2.0], 0.1), GridView::one_d(&[1.0], 0.2));
        assert!(err.is_err());
    }

    #[test]
    fn separable_matches_general_convolution() {
        let (vr, vc) = (20, 30);
        let values: Vec<f64> = (0..vr * vc).map(|i| ((i * 7919) % 101) as f64 / 101.0).collect();
        let ky = [0.1, 0.3, 0.4, 0.3, 0.1];
        let kx = [0.05, 0.1, 0.2, 0.3, 0.2, 0.1, 0.05];
        let outer: Vec<f64> = ky.iter().flat_map(|a| kx.iter().map(move |b| a * b)).collect();
        let sp = [0.5, 0.25];
        let expect = convolve_grid(
            GridView::two_d(&values, vr, vc, sp),
            GridView::two_d(&outer, ky.len(), kx.len(), sp).centered_at([2, 3]),
        )
        .unwrap();
        let mut conv = SeparableConvolver::new(32, 64);
        let mut out = Vec::new();
        conv.convolve(&values, vr, vc, &ky, 2, &kx, 3, sp[0] * sp[1], &mut out);
        assert_eq!(out.len(), expect.len());
        for (a, b) in out.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
