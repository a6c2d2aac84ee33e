//! The Galilean field J = x + 2it∂ in one dimension, and the weighted
//! energy vector built from ‖J^k u‖_θ.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{derivative, resolution_guard, sobolev_norm, Field};
use crate::lemmas::{Check, SLACK};
use crate::multiindex::{log_factorial_power, FactorialKind, LogReal, MultiIndex};
use crate::par::{map_indexed, Exec};
use crate::propagator::{free_evolve, FreeSolution};

/// Highest order accepted by the direct recursion.
pub const DIRECT_J_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevreyParams {
    pub theta: f64,
    pub s: f64,
    pub r: f64,
    pub l: usize,
}

impl GevreyParams {
    pub fn new(theta: f64, s: f64, r: f64, l: usize) -> Result<Self> {
        let p = GevreyParams { theta, s, r, l };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s >= 0.5) {
            return Err(Error::InvalidArgument(format!("Gevrey exponent s must be >= 1/2, got {}", self.s)));
        }
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(Error::InvalidArgument(format!("scale r must lie in (0, 1], got {}", self.r)));
        }
        if !self.theta.is_finite() {
            return Err(Error::InvalidArgument("theta must be finite".into()));
        }
        Ok(())
    }

    /// r^k / (k_*)!^s for a one-dimensional order k.
    pub fn entry_weight(&self, k: usize) -> f64 {
        let alpha = MultiIndex::new(vec![k as u32]);
        (LogReal::from_f64(self.r).powf(k as f64) / log_factorial_power(&alpha, self.s, FactorialKind::Star)).to_f64()
    }
}

fn j_step(v: &Field, t: f64) -> Field {
    let mut next = v.map(|x, z| z * x);
    if t != 0.0 {
        next.axpy(Complex64::new(0.0, 2.0 * t), &derivative(v, 1));
    }
    next
}

/// J^k u by the recursion J^{j+1}u = x J^j u + 2it ∂J^j u, for any field u.
pub fn apply_j(u: &Field, t: f64, order: usize) -> Result<Field> {
    Ok(apply_j_all(u, t, order)?.pop().expect("non-empty"))
}

/// [J^0 u, …, J^order u] by the direct recursion. The input must pass the
/// resolution guard; roundoff then grows roughly like (2|t|ξ_max)^k, which is
/// why the order is capped.
pub fn apply_j_all(u: &Field, t: f64, order: usize) -> Result<Vec<Field>> {
    if order > DIRECT_J_CAP {
        return Err(Error::InvalidArgument(format!("direct J recursion capped at order {DIRECT_J_CAP}, got {order}")));
    }
    resolution_guard(u, 0)?;
    let mut out = Vec::with_capacity(order + 1);
    out.push(u.clone());
    for k in 1..=order {
        let next = j_step(&out[k - 1], t);
        out.push(next);
    }
    Ok(out)
}

/// x^k u0, the initial moment field.
pub fn moment(u0: &Field, order: usize) -> Field {
    u0.map(|x, z| z * x.powi(order as i32))
}

/// J^k e^{itΔ}u0 = e^{itΔ}(x^k u0); stable at all orders.
pub fn apply_j_free(solution: &FreeSolution, t: f64, order: usize) -> Field {
    free_evolve(&moment(solution.initial(), order), t)
}

pub fn apply_j_free_all(solution: &FreeSolution, t: f64, max_order: usize, exec: Exec) -> Vec<Field> {
    map_indexed(exec, max_order + 1, |k| apply_j_free(solution, t, k))
}

/// Where J^k u comes from.
#[derive(Debug, Clone)]
pub enum JSource<'a> {
    /// u(t) itself, differentiated by the recursion.
    Direct(&'a Field),
    /// A free solution, through its initial datum.
    FreeIntertwining(&'a FreeSolution),
}

impl JSource<'_> {
    fn fields(&self, t: f64, max_order: usize, exec: Exec) -> Result<Vec<Field>> {
        match self {
            JSource::Direct(u) => apply_j_all(u, t, max_order),
            JSource::FreeIntertwining(sol) => Ok(apply_j_free_all(sol, t, max_order, exec)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GevreyVector {
    pub params: GevreyParams,
    /// (order, weighted entry) in increasing order.
    pub entries: Vec<(usize, f64)>,
    pub aggregate: f64,
}

impl GevreyVector {
    fn from_norms(params: GevreyParams, norms: &[f64]) -> Self {
        let entries: Vec<(usize, f64)> = norms.iter().enumerate().map(|(k, &v)| (k, params.entry_weight(k) * v)).collect();
        let aggregate = entries.iter().map(|(_, e)| e * e).sum::<f64>().sqrt();
        GevreyVector { params, entries, aggregate }
    }
}

pub fn gevrey_vector(source: &JSource<'_>, t: f64, params: GevreyParams, exec: Exec) -> Result<GevreyVector> {
    params.validate()?;
    let fields = source.fields(t, params.l, exec)?;
    let norms = map_indexed(exec, fields.len(), |k| sobolev_norm(&fields[k], params.theta, 0.0));
    Ok(GevreyVector::from_norms(params, &norms))
}

/// (Σ r^{2k}/k_*!^{2s} ‖J^k ∂u‖²_{θ−1})^{1/2} against √2(1+2r) X^l, both by direct recursion.
pub fn commutation_inequality_check(u: &Field, t: f64, params: GevreyParams, exec: Exec) -> Result<Check> {
    let x = gevrey_vector(&JSource::Direct(u), t, params, exec)?;
    let du = derivative(u, 1);
    let fields = apply_j_all(&du, t, params.l)?;
    let lhs = fields
        .iter()
        .enumerate()
        .map(|(k, f)| (params.entry_weight(k) * sobolev_norm(f, params.theta - 1.0, 0.0)).powi(2))
        .sum::<f64>()
        .sqrt();
    let rhs = std::f64::consts::SQRT_2 * (1.0 + 2.0 * params.r) * x.aggregate;
    Ok(Check { lhs, rhs, holds: lhs <= rhs * (1.0 + SLACK) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use crate::propagator::free_evolve;
    use std::f64::consts::PI;

    fn gaussian(g: Grid1D) -> Field {
        Field::from_real_fn(g, |x| (-0.5 * x * x).exp())
    }

    #[test]
    fn j_at_time_zero_is_moment() {
        let g = Grid1D::new(512, 40.0).unwrap();
        let u = gaussian(g);
        for k in 0..6 {
            assert!(apply_j(&u, 0.0, k).unwrap().relative_error(&moment(&u, k)) < 1e-14);
        }
    }

    #[test]
    fn j_on_pure_mode() {
        let g = Grid1D::new(256, 40.0).unwrap();
        let k = 4.0 * g.dxi();
        let t = 0.3;
        let mode = Field::from_fn(g, |x| Complex64::from_polar(1.0, k * x));
        let want = mode.map(|x, z| z * (x + 2.0 * Complex64::i() * t * Complex64::i() * k));
        let got = j_step(&mode, t);
        assert!(got.relative_error(&want) < 1e-12);
    }

    #[test]
    fn commutator_identity() {
        let g = Grid1D::new(512, 40.0).unwrap();
        let u = gaussian(g).map(|x, z| z * Complex64::from_polar(1.0, 0.5 * x));
        let t = 0.7;
        let lhs = j_step(&derivative(&u, 1), t).sub(&derivative(&j_step(&u, t), 1)).unwrap();
        assert!(lhs.add(&u).unwrap().norm() < 1e-12 * u.norm());
    }

    #[test]
    fn free_intertwining_norms() {
        let g = Grid1D::new(1024, 60.0).unwrap();
        let sol = FreeSolution::new(gaussian(g));
        for theta in [0.0, 2.0] {
            for k in 0..=8 {
                let a = sobolev_norm(&apply_j_free(&sol, 0.8, k), theta, 0.0);
                let b = sobolev_norm(&moment(sol.initial(), k), theta, 0.0);
                assert!((a - b).abs() < 1e-10 * b);
            }
        }
    }

    #[test]
    fn two_path_j_agreement_low_order() {
        // wide Gaussian on a coarse grid keeps (2tξ_max)^6 roundoff growth small
        let g = Grid1D::new(128, 64.0).unwrap();
        let sol = FreeSolution::new(Field::from_real_fn(g, |x| (-x * x / 8.0).exp()));
        let t = 0.5;
        let direct = apply_j_all(&free_evolve(sol.initial(), t), t, 6).unwrap();
        for (k, d) in direct.iter().enumerate() {
            assert!(d.relative_error(&apply_j_free(&sol, t, k)) < 1e-8, "k={k}");
        }
    }

    #[test]
    fn gevrey_vector_moments_at_zero() {
        let g = Grid1D::new(1024, 60.0).unwrap();
        let u = gaussian(g);
        let params = GevreyParams::new(0.0, 1.0, 1.0, 2).unwrap();
        let v = gevrey_vector(&JSource::Direct(&u), 0.0, params, Exec::Sequential).unwrap();
        assert!((v.entries[0].1 - PI.powf(0.25)).abs() < 1e-12);
        assert!((v.entries[1].1 - (PI.sqrt() / 2.0).sqrt()).abs() < 1e-12);
        assert!((v.entries[2].1 - (3.0 * PI.sqrt() / 4.0).sqrt()).abs() < 1e-12);
        let agg = v.entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
        assert_eq!(v.aggregate, agg);
    }

    #[test]
    fn gevrey_vector_free_is_time_independent() {
        let g = Grid1D::new(1024, 60.0).unwrap();
        let sol = FreeSolution::new(gaussian(g));
        let params = GevreyParams::new(2.0, 1.0, 0.5, 8).unwrap();
        let a = gevrey_vector(&JSource::FreeIntertwining(&sol), 0.0, params, Exec::Parallel).unwrap();
        let b = gevrey_vector(&JSource::FreeIntertwining(&sol), 0.7, params, Exec::Parallel).unwrap();
        for (x, y) in a.entries.iter().zip(&b.entries) {
            assert!((x.1 - y.1).abs() < 1e-9 * x.1.max(1e-300));
        }
        let mut prev = 0.0;
        for l in 0..=8 {
            let p = GevreyParams { l, ..params };
            let x = gevrey_vector(&JSource::FreeIntertwining(&sol), 0.7, p, Exec::Sequential).unwrap();
            assert!(x.aggregate >= prev);
            prev = x.aggregate;
        }
    }

    #[test]
    fn commutation_inequality_examples() {
        let g = Grid1D::new(512, 40.0).unwrap();
        let params = GevreyParams::new(2.0, 1.0, 0.5, 4).unwrap();
        let zero = commutation_inequality_check(&Field::zeros(g), 0.5, params, Exec::Sequential).unwrap();
        assert_eq!((zero.lhs, zero.rhs), (0.0, 0.0));
        assert!(zero.holds);
        let c = commutation_inequality_check(&gaussian(g), 0.5, params, Exec::Sequential).unwrap();
        assert!(c.holds && c.lhs > 0.0);
    }

    #[test]
    fn params_validation() {
        assert!(GevreyParams::new(2.0, 0.4, 0.5, 3).is_err());
        assert!(GevreyParams::new(2.0, 1.0, 0.0, 3).is_err());
        assert!(GevreyParams::new(2.0, 1.0, 1.5, 3).is_err());
        assert!(apply_j(&gaussian(Grid1D::new(64, 10.0).unwrap()), 0.1, 13).is_err());
    }
}
