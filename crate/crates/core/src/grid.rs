//! Periodic grid on [-L/2, L/2), spectral transforms and Fourier multipliers.
//!
//! Spectrum coefficients approximate the continuous transform
//! û(ξ) = (2π)^{-1/2} ∫ u(x) e^{-ixξ} dx, so that `h Σ|f|² = dξ Σ|û|²`.
//! Multiplier operators skip that normalization and work on raw FFT output.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::warning::{Mode, Warning};

/// Relative sup-norm level a field must stay below in the outer 5% of the domain.
pub const BOUNDARY_TOL: f64 = 1e-12;
pub const OUTER_FRACTION: f64 = 0.05;
/// Upper bound on the high-frequency share (amplitude ratio) of a resolved field.
pub const GUARD_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    num_points: usize,
    length: f64,
}

impl Grid1D {
    pub fn new(num_points: usize, length: f64) -> Result<Self> {
        if num_points < 16 || !num_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("num_points must be a power of two >= 16, got {num_points}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        Ok(Grid1D { num_points, length })
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.num_points as f64
    }

    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn x(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.spacing()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.num_points).map(|j| self.x(j)).collect()
    }

    /// Signed mode number of FFT slot `j`; the Nyquist slot maps to -N/2.
    pub fn mode(&self, j: usize) -> i64 {
        let n = self.num_points as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    pub fn frequency(&self, j: usize) -> f64 {
        self.mode(j) as f64 * self.dxi()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.num_points).map(|j| self.frequency(j)).collect()
    }

    pub fn max_frequency(&self) -> f64 {
        PI / self.spacing()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid1D,
    samples: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: Grid1D, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.num_points {
            return Err(Error::SizeMismatch { expected: grid.num_points, got: samples.len() });
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("field contains non-finite samples".into()));
        }
        Ok(Field { grid, samples })
    }

    pub(crate) fn from_vec_unchecked(grid: Grid1D, samples: Vec<Complex64>) -> Self {
        debug_assert_eq!(samples.len(), grid.num_points);
        Field { grid, samples }
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> Complex64) -> Self {
        let samples = (0..grid.num_points).map(|j| f(grid.x(j))).collect();
        Field { grid, samples }
    }

    pub fn from_real_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        Field::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Field { grid, samples: vec![ZERO; grid.num_points] }
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    /// Pointwise map with access to the coordinate.
    pub fn map(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Field {
        let samples = self.samples.iter().enumerate().map(|(j, &z)| f(self.grid.x(j), z)).collect();
        Field { grid: self.grid, samples }
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Field> {
        self.same_grid(other)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect();
        Ok(Field { grid: self.grid, samples })
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            Err(Error::GridMismatch)
        } else {
            Ok(())
        }
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product on the grid (no de-aliasing).
    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: Complex64) -> Field {
        self.map(|_, z| z * c)
    }

    pub fn conj(&self) -> Field {
        self.map(|_, z| z.conj())
    }

    pub fn axpy(&mut self, c: Complex64, other: &Field) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, b) in self.samples.iter_mut().zip(&other.samples) {
            *a += c * b;
        }
    }

    /// Discrete L² norm, sqrt(h Σ|f|²).
    pub fn norm(&self) -> f64 {
        (self.grid.spacing() * self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// ‖self − reference‖ / ‖reference‖.
    pub fn relative_error(&self, reference: &Field) -> f64 {
        let diff = self.sub(reference).expect("relative_error on mismatched grids");
        diff.norm() / reference.norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid1D,
    coefficients: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: Grid1D, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != grid.num_points {
            return Err(Error::SizeMismatch { expected: grid.num_points, got: coefficients.len() });
        }
        Ok(Spectrum { grid, coefficients })
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    /// Coefficients in FFT slot order (see [`Grid1D::mode`]).
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// sqrt(dξ Σ|û|²)
    pub fn norm(&self) -> f64 {
        (self.grid.dxi() * self.coefficients.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }
}

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> PlanPair {
    static CACHE: OnceLock<Mutex<HashMap<usize, PlanPair>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

pub(crate) fn fft_forward(buf: &mut [Complex64]) {
    plans(buf.len()).0.process(buf);
}

/// Unnormalized inverse FFT.
pub(crate) fn fft_inverse(buf: &mut [Complex64]) {
    plans(buf.len()).1.process(buf);
}

pub fn transform(f: &Field) -> Spectrum {
    let g = f.grid;
    let mut buf = f.samples.clone();
    fft_forward(&mut buf);
    let c = g.spacing() / (2.0 * PI).sqrt();
    let x0 = g.x(0);
    for (j, z) in buf.iter_mut().enumerate() {
        *z *= Complex64::from_polar(c, -g.frequency(j) * x0);
    }
    Spectrum { grid: g, coefficients: buf }
}

pub fn inverse_transform(s: &Spectrum) -> Field {
    let g = s.grid;
    let x0 = g.x(0);
    let c = g.dxi() / (2.0 * PI).sqrt();
    let mut buf: Vec<Complex64> = s
        .coefficients
        .iter()
        .enumerate()
        .map(|(j, &z)| z * Complex64::from_polar(c, g.frequency(j) * x0))
        .collect();
    fft_inverse(&mut buf);
    Field { grid: g, samples: buf }
}

/// Applies the Fourier multiplier `m(slot, ξ)`.
pub fn apply_multiplier(f: &Field, m: impl Fn(usize, f64) -> Complex64) -> Field {
    let g = f.grid;
    let mut buf = f.samples.clone();
    fft_forward(&mut buf);
    let inv_n = 1.0 / g.num_points as f64;
    for (j, z) in buf.iter_mut().enumerate() {
        *z *= m(j, g.frequency(j)) * inv_n;
    }
    fft_inverse(&mut buf);
    Field { grid: g, samples: buf }
}

/// ⟨D⟩^θ, the multiplier (1 + ξ²)^{θ/2}.
pub fn bessel_potential(f: &Field, theta: f64) -> Field {
    if theta == 0.0 {
        return f.clone();
    }
    apply_multiplier(f, |_, xi| Complex64::new((1.0 + xi * xi).powf(0.5 * theta), 0.0))
}

/// (iξ)^k as a multiplier value, with the Nyquist slot zeroed for odd k.
pub(crate) fn derivative_symbol(grid: &Grid1D, slot: usize, xi: f64, order: usize) -> Complex64 {
    if order % 2 == 1 && slot == grid.num_points / 2 {
        return ZERO;
    }
    Complex64::new(0.0, xi).powi(order as i32)
}

/// ∂^order via the multiplier (iξ)^order. Orders past ~30 lose all accuracy.
pub fn derivative(f: &Field, order: usize) -> Field {
    if order == 0 {
        return f.clone();
    }
    let g = f.grid;
    apply_multiplier(f, |j, xi| derivative_symbol(&g, j, xi, order))
}

/// Pointwise multiplication by ⟨x⟩^power.
pub fn weight_apply(f: &Field, power: f64) -> Field {
    if power == 0.0 {
        return f.clone();
    }
    f.map(|x, z| z * (1.0 + x * x).powf(0.5 * power))
}

/// ‖⟨x⟩^l ⟨D⟩^θ f‖, weight applied after the Bessel potential.
pub fn sobolev_norm(f: &Field, theta: f64, l: f64) -> f64 {
    weight_apply(&bessel_potential(f, theta), l).norm()
}

/// [`sobolev_norm`] plus the truncation check on `f`.
pub fn sobolev_norm_checked(f: &Field, theta: f64, l: f64, mode: Mode, context: &str) -> Result<(f64, Option<Warning>)> {
    let warning = check_boundary(f, mode, context)?;
    Ok((sobolev_norm(f, theta, l), warning))
}

/// max|f| over |x| ≥ (1/2 − 5%)L, relative to max|f|; 0 for the zero field.
pub fn boundary_mass_ratio(f: &Field) -> f64 {
    let sup = f.sup_norm();
    if sup == 0.0 {
        return 0.0;
    }
    let g = f.grid;
    let cut = (0.5 - OUTER_FRACTION) * g.length;
    let edge = f
        .samples
        .iter()
        .enumerate()
        .filter(|(j, _)| g.x(*j).abs() >= cut)
        .map(|(_, z)| z.norm())
        .fold(0.0, f64::max);
    edge / sup
}

/// Leftmost 5% only: the cumulative integral just needs negligible mass at its start.
pub fn left_boundary_ratio(f: &Field) -> f64 {
    let sup = f.sup_norm();
    if sup == 0.0 {
        return 0.0;
    }
    let g = f.grid;
    let cut = -(0.5 - OUTER_FRACTION) * g.length;
    let edge = f
        .samples
        .iter()
        .enumerate()
        .filter(|(j, _)| g.x(*j) <= cut)
        .map(|(_, z)| z.norm())
        .fold(0.0, f64::max);
    edge / sup
}

pub fn check_boundary(f: &Field, mode: Mode, context: &str) -> Result<Option<Warning>> {
    escalate(boundary_mass_ratio(f), mode, context)
}

pub(crate) fn escalate(ratio: f64, mode: Mode, context: &str) -> Result<Option<Warning>> {
    if ratio <= BOUNDARY_TOL {
        return Ok(None);
    }
    match mode {
        Mode::Strict => Err(Error::BoundaryMass { context: context.into(), ratio }),
        Mode::Lenient => Ok(Some(Warning::BoundaryMass { context: context.into(), ratio })),
    }
}

/// Amplitude share of the top third of the frequency band: sqrt(Σ_{|k|>N/3}|f̂|² / Σ|f̂|²).
pub fn high_frequency_ratio(f: &Field) -> f64 {
    let g = f.grid;
    let mut buf = f.samples.clone();
    fft_forward(&mut buf);
    let cut = g.num_points as i64 / 3;
    let mut hi = 0.0;
    let mut total = 0.0;
    for (j, z) in buf.iter().enumerate() {
        let e = z.norm_sqr();
        total += e;
        if g.mode(j).abs() > cut {
            hi += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        (hi / total).sqrt()
    }
}

/// Errors with the given order if `f` fails the resolution guard.
pub fn resolution_guard(f: &Field, order: usize) -> Result<()> {
    let ratio = high_frequency_ratio(f);
    if ratio <= GUARD_TOL {
        Ok(())
    } else {
        Err(Error::Resolution { order, ratio })
    }
}

/// Running trapezoidal integral from the left edge.
pub fn cumulative_integral(f: &Field) -> Field {
    let h = f.grid.spacing();
    let mut out = Vec::with_capacity(f.samples.len());
    let mut acc = ZERO;
    out.push(acc);
    for w in f.samples.windows(2) {
        acc += (w[0] + w[1]) * (0.5 * h);
        out.push(acc);
    }
    Field { grid: f.grid, samples: out }
}

/// Trapezoid with the first Euler–Maclaurin endpoint correction,
/// −h²/12 (f'(x) − f'(x₀)), using a spectral f'. Fourth order for smooth f.
pub fn cumulative_integral_corrected(f: &Field) -> Field {
    let h = f.grid.spacing();
    let df = derivative(f, 1);
    let d0 = df.samples[0];
    let mut out = cumulative_integral(f);
    for (z, d) in out.samples.iter_mut().zip(&df.samples) {
        *z -= (d - d0) * (h * h / 12.0);
    }
    out
}

/// Zero-pads both spectra to 2N, multiplies on the fine grid, and truncates back.
pub fn dealiased_product(f: &Field, g: &Field) -> Result<Field> {
    f.same_grid(g)?;
    let n = f.grid.num_points;
    let pad = |field: &Field| {
        let mut spec = field.samples.clone();
        fft_forward(&mut spec);
        let mut wide = vec![ZERO; 2 * n];
        for (j, z) in spec.iter().enumerate() {
            if j < n / 2 {
                wide[j] = *z;
            } else if j > n / 2 {
                wide[n + j] = *z;
            }
        }
        fft_inverse(&mut wide);
        for z in wide.iter_mut() {
            *z /= n as f64;
        }
        wide
    };
    let a = pad(f);
    let b = pad(g);
    let mut prod: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    fft_forward(&mut prod);
    let mut back = vec![ZERO; n];
    for (j, z) in back.iter_mut().enumerate() {
        if j < n / 2 {
            *z = prod[j];
        } else if j > n / 2 {
            *z = prod[n + j];
        }
    }
    fft_inverse(&mut back);
    let scale = 1.0 / (2 * n) as f64;
    for z in back.iter_mut() {
        *z *= scale;
    }
    Ok(Field { grid: f.grid, samples: back })
}
