//! Uniform periodic grids, sampled fields and spectral calculus.
//!
//! Every field lives on a [`Grid1D`] with `n` (a power of two) samples at
//! `x_j = x_min + j dx`. Derivatives are Fourier multipliers by default,
//! quadrature is the periodic rectangle rule and the momentum representation
//! is a unitary-convention discrete Fourier transform.

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative density below which a sample counts as empty.
pub const P_FLOOR_REL: f64 = 1e-13;

/// Edge samples on each side inspected by [`boundary_leakage`].
const EDGE_BAND: usize = 4;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn fft_forward(buf: &mut [Complex64]) {
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(buf);
}

/// Unnormalized inverse; callers divide by `n`.
pub(crate) fn fft_inverse(buf: &mut [Complex64]) {
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    fft.process(buf);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n: usize,
    dx: f64,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "grid size must be a power of two >= 16, got {n}"
            )));
        }
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::InvalidArgument(format!(
                "grid extent [{x_min}, {x_max}) is empty or not finite"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n,
            dx: (x_max - x_min) / n as f64,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Index of the reference point used to anchor the momentum potential.
    pub fn midpoint(&self) -> usize {
        self.n / 2
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.x_min + self.x_max)
    }

    pub fn momentum_grid(&self) -> MomentumGrid {
        MomentumGrid::for_grid(self)
    }

    fn check_same(&self, other: &Grid1D) -> Result<()> {
        if self != other {
            return Err(Error::InvalidArgument(
                "fields live on different grids".into(),
            ));
        }
        Ok(())
    }
}

/// Conjugate wavenumbers of a [`Grid1D`] in transform (FFT) order:
/// `0, dk, .., (n/2-1) dk, -n/2 dk, .., -dk`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    pub k: Vec<f64>,
    pub dk: f64,
}

impl MomentumGrid {
    fn for_grid(grid: &Grid1D) -> Self {
        let n = grid.n;
        let dk = 2.0 * PI / (n as f64 * grid.dx);
        let k = (0..n)
            .map(|j| {
                let m = if j < n / 2 {
                    j as f64
                } else {
                    j as f64 - n as f64
                };
                m * dk
            })
            .collect();
        Self { k, dk }
    }

    /// Index permutation that sorts the wavenumbers in ascending order.
    pub fn ascending_order(&self) -> Vec<usize> {
        let n = self.k.len();
        (0..n).map(|i| (i + n / 2) % n).collect()
    }
}

fn check_finite_real(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(j) => Err(Error::InvalidField(format!(
            "non-finite value at index {j}"
        ))),
        None => Ok(()),
    }
}

fn check_finite_complex(values: &[Complex64]) -> Result<()> {
    match values
        .iter()
        .position(|v| !(v.re.is_finite() && v.im.is_finite()))
    {
        Some(j) => Err(Error::InvalidField(format!(
            "non-finite value at index {j}"
        ))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid1D,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::InvalidField(format!(
                "expected {} samples, got {}",
                grid.n,
                values.len()
            )));
        }
        check_finite_real(&values)?;
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.points().into_iter().map(f).collect())
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n],
        }
    }

    pub(crate) fn from_raw(grid: Grid1D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n);
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &RealField, b: f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Self::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
    }

    pub fn derivative(&self, order: u32, mode: DerivativeMode) -> Result<Derivative<RealField>> {
        check_order(order)?;
        check_finite_real(&self.values)?;
        let ran = resolve_mode(mode, &self.values)?;
        let values = match ran {
            DerivativeMode::FiniteDifference => fd_derivative(&self.values, self.grid.dx, order),
            _ => spectral_derivative_real(&self.values, self.grid.dx, order),
        };
        Ok(Derivative {
            field: Self::from_raw(self.grid, values),
            mode: ran,
        })
    }

    /// Band-limited (trigonometric) interpolation at arbitrary points. Points
    /// outside `[x_min, x_max)` return zero: callers use this only for fields
    /// that have decayed at the box edges.
    pub fn interpolate(&self, at: &[f64]) -> Vec<f64> {
        let n = self.grid.n;
        let mut coef: Vec<Complex64> = self
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        fft_forward(&mut coef);
        let kgrid = self.grid.momentum_grid();
        at.iter()
            .map(|&y| {
                if y < self.grid.x_min || y >= self.grid.x_max {
                    return 0.0;
                }
                let u = y - self.grid.x_min;
                let mut acc = 0.0;
                for (j, c) in coef.iter().enumerate() {
                    let k = kgrid.k[j];
                    if j == n / 2 {
                        // Nyquist mode: real cosine
                        acc += c.re * (k * u).cos();
                    } else {
                        let e = Complex64::from_polar(1.0, k * u);
                        acc += (c * e).re;
                    }
                }
                acc / n as f64
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid1D,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::InvalidField(format!(
                "expected {} samples, got {}",
                grid.n,
                values.len()
            )));
        }
        check_finite_complex(&values)?;
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::new(grid, grid.points().into_iter().map(f).collect())
    }

    pub(crate) fn from_raw(grid: Grid1D, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.n);
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// `|psi|^2` as a real field.
    pub fn density(&self) -> RealField {
        RealField::from_raw(
            self.grid,
            self.values.iter().map(|z| z.norm_sqr()).collect(),
        )
    }

    /// `sum |psi|^2 dx`.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidField("zero wavefunction".into()));
        }
        Ok(Self::from_raw(
            self.grid,
            self.values.iter().map(|z| z / norm).collect(),
        ))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|z| z * factor).collect())
    }

    pub fn derivative(&self, order: u32, mode: DerivativeMode) -> Result<Derivative<ComplexField>> {
        check_order(order)?;
        check_finite_complex(&self.values)?;
        let ran = resolve_mode(mode, &self.values)?;
        let values = match ran {
            DerivativeMode::FiniteDifference => {
                let re: Vec<f64> = self.values.iter().map(|z| z.re).collect();
                let im: Vec<f64> = self.values.iter().map(|z| z.im).collect();
                let dre = fd_derivative(&re, self.grid.dx, order);
                let dim = fd_derivative(&im, self.grid.dx, order);
                dre.into_iter()
                    .zip(dim)
                    .map(|(a, b)| Complex64::new(a, b))
                    .collect()
            }
            _ => spectral_derivative(&self.values, self.grid.dx, order),
        };
        Ok(Derivative {
            field: Self::from_raw(self.grid, values),
            mode: ran,
        })
    }
}

/// How a derivative is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DerivativeMode {
    /// Fourier multiplier `(ik)^order`; requires a numerically periodic field.
    Spectral,
    /// Second-order central differences with one-sided second-order stencils
    /// at the two ends (no wrap-around).
    FiniteDifference,
    /// Spectral when the field passes the periodicity test, else finite differences.
    Auto,
}

/// A derivative together with the mode that actually produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivative<F> {
    pub field: F,
    pub mode: DerivativeMode,
}

fn check_order(order: u32) -> Result<()> {
    if order == 1 || order == 2 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "derivative order must be 1 or 2, got {order}"
        )))
    }
}

trait Sample: Copy {
    fn magnitude(self) -> f64;
    fn first_difference(a: Self, b: Self) -> f64;
    fn second_difference(a: Self, b: Self, c: Self) -> f64;
}

impl Sample for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn first_difference(a: Self, b: Self) -> f64 {
        (a - b).abs()
    }
    fn second_difference(a: Self, b: Self, c: Self) -> f64 {
        (a - 2.0 * b + c).abs()
    }
}

impl Sample for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
    fn first_difference(a: Self, b: Self) -> f64 {
        (a - b).norm()
    }
    fn second_difference(a: Self, b: Self, c: Self) -> f64 {
        (a - b * 2.0 + c).norm()
    }
}

fn resolve_mode<T: Sample>(mode: DerivativeMode, values: &[T]) -> Result<DerivativeMode> {
    match mode {
        DerivativeMode::FiniteDifference => Ok(mode),
        DerivativeMode::Spectral if is_numerically_periodic(values) => Ok(mode),
        DerivativeMode::Spectral => Err(Error::NotPeriodic),
        DerivativeMode::Auto if is_numerically_periodic(values) => Ok(DerivativeMode::Spectral),
        DerivativeMode::Auto => Ok(DerivativeMode::FiniteDifference),
    }
}

/// The wrap-around first and second differences must look like interior ones:
/// this rejects ramps (value jump) and even polynomials (slope kink).
fn is_numerically_periodic<T: Sample>(values: &[T]) -> bool {
    let n = values.len();
    let scale = values.iter().map(|v| v.magnitude()).fold(0.0, f64::max);
    if scale == 0.0 {
        return true;
    }
    let slack = 1e-10 * scale;
    let max_first = (1..n)
        .map(|j| T::first_difference(values[j], values[j - 1]))
        .fold(0.0, f64::max);
    if T::first_difference(values[0], values[n - 1]) > 2.0 * max_first + slack {
        return false;
    }
    let max_second = (1..n - 1)
        .map(|j| T::second_difference(values[j - 1], values[j], values[j + 1]))
        .fold(0.0, f64::max);
    T::second_difference(values[n - 1], values[0], values[1]) <= 4.0 * max_second + slack
}

pub(crate) fn spectral_derivative(values: &[Complex64], dx: f64, order: u32) -> Vec<Complex64> {
    let n = values.len();
    let dk = 2.0 * PI / (n as f64 * dx);
    let mut buf = values.to_vec();
    fft_forward(&mut buf);
    let inv_n = 1.0 / n as f64;
    for (j, c) in buf.iter_mut().enumerate() {
        let m = if j < n / 2 {
            j as f64
        } else {
            j as f64 - n as f64
        };
        let k = m * dk;
        *c *= match order {
            1 if j == n / 2 => Complex64::new(0.0, 0.0),
            1 => Complex64::new(0.0, k * inv_n),
            _ => Complex64::new(-k * k * inv_n, 0.0),
        };
    }
    fft_inverse(&mut buf);
    buf
}

pub(crate) fn spectral_derivative_real(values: &[f64], dx: f64, order: u32) -> Vec<f64> {
    let c: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    spectral_derivative(&c, dx, order)
        .into_iter()
        .map(|z| z.re)
        .collect()
}

pub(crate) fn fd_derivative(values: &[f64], dx: f64, order: u32) -> Vec<f64> {
    let n = values.len();
    let f = values;
    let mut out = vec![0.0; n];
    if order == 1 {
        for j in 1..n - 1 {
            out[j] = (f[j + 1] - f[j - 1]) / (2.0 * dx);
        }
        out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx);
        out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dx);
    } else {
        let h2 = dx * dx;
        for j in 1..n - 1 {
            out[j] = (f[j + 1] - 2.0 * f[j] + f[j - 1]) / h2;
        }
        out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
        out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
    }
    out
}

/// Periodic rectangle rule `dx * sum f_j`.
pub fn integrate(f: &RealField) -> Result<f64> {
    check_finite_real(&f.values)?;
    Ok(f.values.iter().sum::<f64>() * f.grid.dx)
}

pub(crate) fn integrate_raw(values: &[f64], dx: f64) -> f64 {
    values.iter().sum::<f64>() * dx
}

/// Largest edge-band density relative to the peak density of `psi`.
pub fn boundary_leakage(psi: &ComplexField) -> f64 {
    density_leakage(&psi.values.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>())
}

pub(crate) fn density_leakage(p: &[f64]) -> f64 {
    let n = p.len();
    let peak = p.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let band = EDGE_BAND.min(n / 2);
    let edge = p[..band]
        .iter()
        .chain(&p[n - band..])
        .copied()
        .fold(0.0, f64::max);
    edge / peak
}

/// Contiguous index range `[first, last]` spanned by samples above a floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Support {
    pub first: usize,
    pub last: usize,
}

impl Support {
    /// Hull of the samples with `p > threshold`; `None` if there are none.
    pub fn above(p: &[f64], threshold: f64) -> Option<Self> {
        let first = p.iter().position(|&v| v > threshold)?;
        let last = p.iter().rposition(|&v| v > threshold)?;
        Some(Self { first, last })
    }

    /// Support at the standard relative floor [`P_FLOOR_REL`].
    pub fn of_density(p: &[f64]) -> Option<Self> {
        let peak = p.iter().copied().fold(0.0, f64::max);
        Self::above(p, P_FLOOR_REL * peak)
    }

    pub fn contains(&self, j: usize) -> bool {
        j >= self.first && j <= self.last
    }

    /// First interior sample at or below `threshold` (a node).
    pub fn interior_dip(&self, p: &[f64], threshold: f64) -> Option<usize> {
        (self.first..=self.last).find(|&j| p[j] <= threshold)
    }

    /// Mask with ones on the support.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        (0..n).map(|j| self.contains(j)).collect()
    }

    /// Replace values outside the support by the nearest support value.
    pub fn extend_constant(&self, values: &mut [f64]) {
        let left = values[self.first];
        let right = values[self.last];
        for v in &mut values[..self.first] {
            *v = left;
        }
        for v in &mut values[self.last + 1..] {
            *v = right;
        }
    }
}

/// Unitary-convention transform `phi(k) = dx / sqrt(2 pi) sum_j psi_j e^{-i k x_j}`.
pub fn to_momentum(psi: &ComplexField) -> Result<(MomentumGrid, ComplexField)> {
    check_finite_complex(&psi.values)?;
    let norm = psi.norm_sqr();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized { norm });
    }
    Ok(to_momentum_unchecked(psi))
}

/// Same transform with an arbitrary phase reference point `x_ref`.
pub(crate) fn to_momentum_about(psi: &ComplexField, x_ref: f64) -> (MomentumGrid, Vec<Complex64>) {
    let grid = psi.grid;
    let kgrid = grid.momentum_grid();
    let mut buf = psi.values.clone();
    fft_forward(&mut buf);
    let scale = grid.dx / (2.0 * PI).sqrt();
    let shift = grid.x_min - x_ref;
    for (c, &k) in buf.iter_mut().zip(&kgrid.k) {
        *c *= Complex64::from_polar(scale, -k * shift);
    }
    (kgrid, buf)
}

pub(crate) fn to_momentum_unchecked(psi: &ComplexField) -> (MomentumGrid, ComplexField) {
    let (kgrid, phi) = to_momentum_about(psi, 0.0);
    // the momentum-space field shares the sample count; its own grid object
    // is the position grid so round trips stay typed
    (kgrid, ComplexField::from_raw(psi.grid, phi))
}

/// Inverse of [`to_momentum`].
pub fn from_momentum(grid: &Grid1D, phi: &ComplexField) -> Result<ComplexField> {
    check_finite_complex(&phi.values)?;
    grid.check_same(&phi.grid)?;
    let kgrid = grid.momentum_grid();
    let scale = (2.0 * PI).sqrt() / grid.dx;
    let mut buf: Vec<Complex64> = phi
        .values
        .iter()
        .zip(&kgrid.k)
        .map(|(c, &k)| c * Complex64::from_polar(scale, k * grid.x_min))
        .collect();
    fft_inverse(&mut buf);
    let inv_n = 1.0 / grid.n as f64;
    Ok(ComplexField::from_raw(
        *grid,
        buf.into_iter().map(|z| z * inv_n).collect(),
    ))
}
