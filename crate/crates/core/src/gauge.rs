//! Exact solutions of u_t = iu_xx + 2a(|u|²)_x u + ia²|u|⁴u through the phase
//! twist v = exp(-ia∫_{-∞}^x |u|²) u, which turns the equation into the free one.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{cumulative_integral, cumulative_integral_corrected, derivative, escalate, left_boundary_ratio, Field, Grid1D};
use crate::propagator::free_evolve;
use crate::warning::{Mode, Warning};

/// Rule used for the running mass integral in the phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quadrature {
    Trapezoid,
    /// Trapezoid plus the h² endpoint correction; the default.
    #[default]
    EndCorrected,
}

/// ∫_{x₀}^x |u|² dy on the grid (real-valued, stored as a complex field).
pub fn mass_phase(u: &Field, quad: Quadrature) -> Field {
    let density = u.map(|_, z| Complex64::new(z.norm_sqr(), 0.0));
    let phi = match quad {
        Quadrature::Trapezoid => cumulative_integral(&density),
        Quadrature::EndCorrected => cumulative_integral_corrected(&density),
    };
    phi.map(|_, z| Complex64::new(z.re, 0.0))
}

fn twist(u: &Field, a: f64, sign: f64, quad: Quadrature) -> Field {
    if a == 0.0 {
        return u.clone();
    }
    let phi = mass_phase(u, quad);
    u.zip_with(&phi, |z, p| z * Complex64::from_polar(1.0, sign * a * p.re)).expect("same grid")
}

pub fn gauge_forward(u: &Field, a: f64) -> Field {
    gauge_forward_with(u, a, Quadrature::default())
}

pub fn gauge_inverse(v: &Field, a: f64) -> Field {
    gauge_inverse_with(v, a, Quadrature::default())
}

pub fn gauge_forward_with(u: &Field, a: f64, quad: Quadrature) -> Field {
    twist(u, a, -1.0, quad)
}

/// The phase depends only on |v| = |u|, so the inverse twist uses v's own mass.
pub fn gauge_inverse_with(v: &Field, a: f64, quad: Quadrature) -> Field {
    twist(v, a, 1.0, quad)
}

/// Left-edge mass check for the running integral.
pub fn check_left_boundary(u: &Field, mode: Mode, context: &str) -> Result<Option<Warning>> {
    escalate(left_boundary_ratio(u), mode, context)
}

pub fn solve_special(u0: &Field, a: f64, t: f64) -> Field {
    solve_special_with(u0, a, t, Quadrature::default())
}

pub fn solve_special_with(u0: &Field, a: f64, t: f64, quad: Quadrature) -> Field {
    let v = free_evolve(&gauge_forward_with(u0, a, quad), t);
    gauge_inverse_with(&v, a, quad)
}

/// i(v_x v̄ − v v̄_x), the time derivative of the mass phase. Real up to roundoff.
pub fn phase_rate(v: &Field) -> Field {
    let vx = derivative(v, 1);
    v.zip_with(&vx, |z, zx| Complex64::i() * (zx * z.conj() - z * zx.conj())).expect("same grid")
}

/// u_t = e^{iaφ}(i v_xx + ia φ_t v) with every derivative spectral.
pub fn time_derivative_special(u0: &Field, a: f64, t: f64) -> Field {
    time_derivative_special_with(u0, a, t, Quadrature::default())
}

pub fn time_derivative_special_with(u0: &Field, a: f64, t: f64, quad: Quadrature) -> Field {
    let v = free_evolve(&gauge_forward_with(u0, a, quad), t);
    let vxx = derivative(&v, 2);
    let rate = phase_rate(&v);
    let phi = mass_phase(&v, quad);
    let mut out = Vec::with_capacity(v.samples().len());
    for j in 0..v.samples().len() {
        let inner = Complex64::i() * vxx.samples()[j] + Complex64::i() * a * rate.samples()[j].re * v.samples()[j];
        out.push(Complex64::from_polar(1.0, a * phi.samples()[j].re) * inner);
    }
    Field::from_vec_unchecked(v.grid(), out)
}

/// ‖u_t − iu_xx − 2a(|u|²)_x u − ia²|u|⁴u‖
pub fn residual_special(u: &Field, u_t: &Field, a: f64) -> Result<f64> {
    u.same_grid(u_t)?;
    let uxx = derivative(u, 2);
    let density = u.map(|_, z| Complex64::new(z.norm_sqr(), 0.0));
    let ddensity = derivative(&density, 1);
    let mut acc = 0.0;
    for j in 0..u.samples().len() {
        let z = u.samples()[j];
        let rho = z.norm_sqr();
        let r = u_t.samples()[j]
            - Complex64::i() * uxx.samples()[j]
            - 2.0 * a * ddensity.samples()[j].re * z
            - Complex64::i() * a * a * rho * rho * z;
        acc += r.norm_sqr();
    }
    Ok((acc * u.grid().spacing()).sqrt())
}

/// A gauge solution: coupling, initial datum, time list and the gauged datum.
#[derive(Debug, Clone)]
pub struct GaugeRun {
    pub a: f64,
    pub u0: Field,
    pub times: Vec<f64>,
    pub v0: Field,
    pub warnings: Vec<Warning>,
}

impl GaugeRun {
    pub fn new(u0: Field, a: f64, times: Vec<f64>, mode: Mode) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::InvalidArgument("coupling a must be finite".into()));
        }
        let warnings = check_left_boundary(&u0, mode, "gauge initial datum")?.into_iter().collect();
        let v0 = gauge_forward(&u0, a);
        Ok(GaugeRun { a, u0, times, v0, warnings })
    }

    /// Free factor v(t) = e^{itΔ}v0.
    pub fn free_factor(&self, t: f64) -> Field {
        free_evolve(&self.v0, t)
    }

    pub fn solution(&self, t: f64) -> Field {
        gauge_inverse(&self.free_factor(t), self.a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementStep {
    pub num_points: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub a: f64,
    pub t: f64,
    pub quadrature: Quadrature,
    pub steps: Vec<RefinementStep>,
    /// residual(h) / residual(h/2) for consecutive steps; 4 means second order.
    pub ratios: Vec<f64>,
}

/// Residual of the solver output under successive halvings of the spacing.
pub fn refinement_report(
    profile: impl Fn(f64) -> Complex64,
    length: f64,
    points: &[usize],
    a: f64,
    t: f64,
    quad: Quadrature,
) -> Result<RefinementReport> {
    let mut steps = Vec::new();
    for &n in points {
        let g = Grid1D::new(n, length)?;
        let u0 = Field::from_fn(g, &profile);
        let u = solve_special_with(&u0, a, t, quad);
        let ut = time_derivative_special_with(&u0, a, t, quad);
        steps.push(RefinementStep { num_points: n, residual: residual_special(&u, &ut, a)? });
    }
    let ratios = steps.windows(2).map(|w| w[0].residual / w[1].residual).collect();
    Ok(RefinementReport { a, t, quadrature: quad, steps, ratios })
}
