//! Exact free Schrödinger flow u_t = iu_xx as the multiplier e^{-itξ²}.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{apply_multiplier, derivative_symbol, resolution_guard, Field, Grid1D};

pub const MAX_COMBINED_ORDER: usize = 30;

pub fn free_evolve(u0: &Field, t: f64) -> Field {
    if t == 0.0 {
        return u0.clone();
    }
    apply_multiplier(u0, |_, xi| Complex64::from_polar(1.0, -t * xi * xi))
}

/// (1 + 2it)^{-1/2} exp(-x²/(2(1 + 2it))), principal branch, sampled directly.
pub fn gaussian_exact(t: f64, grid: Grid1D) -> Field {
    let z = Complex64::new(1.0, 2.0 * t);
    let amp = z.sqrt().inv();
    let rate = (2.0 * z).inv();
    Field::from_fn(grid, |x| amp * (-rate * x * x).exp())
}

/// ∂_t^m ∂^α u(t) = i^m ∂^{α+2m} e^{itΔ}u0, with the resolution guard on the result.
pub fn free_time_space_derivative(u0: &Field, t: f64, m: usize, alpha: usize) -> Result<Field> {
    let order = alpha + 2 * m;
    if m + alpha > MAX_COMBINED_ORDER {
        return Err(Error::InvalidArgument(format!("combined order m + α = {} exceeds {MAX_COMBINED_ORDER}", m + alpha)));
    }
    let g = u0.grid();
    let im = Complex64::i().powi(m as i32);
    let out = apply_multiplier(u0, |j, xi| im * derivative_symbol(&g, j, xi, order) * Complex64::from_polar(1.0, -t * xi * xi));
    resolution_guard(&out, order)?;
    Ok(out)
}

/// A free solution carried by its initial datum, so that operators valid only
/// along the free flow cannot be applied to an arbitrary field.
#[derive(Debug, Clone)]
pub struct FreeSolution {
    initial: Field,
}

impl FreeSolution {
    pub fn new(initial: Field) -> Self {
        FreeSolution { initial }
    }

    pub fn initial(&self) -> &Field {
        &self.initial
    }

    pub fn at(&self, t: f64) -> Field {
        free_evolve(&self.initial, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::derivative;

    fn grid() -> Grid1D {
        Grid1D::new(1024, 60.0).unwrap()
    }

    fn gaussian0(g: Grid1D) -> Field {
        Field::from_real_fn(g, |x| (-0.5 * x * x).exp())
    }

    #[test]
    fn zero_time_is_identity() {
        let u0 = gaussian0(grid());
        assert_eq!(free_evolve(&u0, 0.0), u0);
        assert!(gaussian_exact(0.0, grid()).relative_error(&u0) < 1e-15);
    }

    #[test]
    fn gaussian_oracle() {
        let g = grid();
        let u0 = gaussian0(g);
        for t in [0.1, 0.5, 1.0, 2.0] {
            assert!(free_evolve(&u0, t).relative_error(&gaussian_exact(t, g)) < 1e-10, "t={t}");
        }
    }

    #[test]
    fn gaussian_exact_mass() {
        let g = grid();
        for t in [0.0, 0.3, 1.0, -0.7] {
            let m = gaussian_exact(t, g).norm().powi(2);
            assert!((m - std::f64::consts::PI.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn unitarity_and_group() {
        let g = grid();
        let u0 = gaussian0(g).map(|x, z| z * Complex64::from_polar(1.0, 0.8 * x));
        for t in [0.1, 1.0, 10.0] {
            assert!((free_evolve(&u0, t).norm() - u0.norm()).abs() < 1e-13 * u0.norm());
        }
        let a = free_evolve(&free_evolve(&u0, 0.3), 0.9);
        assert!(a.relative_error(&free_evolve(&u0, 1.2)) < 1e-12);
    }

    #[test]
    fn time_derivative_against_finite_difference() {
        let g = grid();
        let u0 = gaussian0(g);
        let t = 0.6;
        let dt = 1e-5;
        let fd = free_evolve(&u0, t + dt).sub(&free_evolve(&u0, t - dt)).unwrap().scale(Complex64::new(0.5 / dt, 0.0));
        let exact = free_time_space_derivative(&u0, t, 1, 0).unwrap();
        assert!(exact.relative_error(&fd) < 1e-8);
        let oracle = derivative(&gaussian_exact(t, g), 2).scale(Complex64::i());
        assert!(exact.relative_error(&oracle) < 1e-10);
    }

    #[test]
    fn order_zero_and_pure_mode() {
        let g = grid();
        let u0 = gaussian0(g);
        let t = 0.4;
        assert!(free_time_space_derivative(&u0, t, 0, 0).unwrap().relative_error(&free_evolve(&u0, t)) < 1e-15);
        let k = 5.0 * g.dxi();
        let mode = Field::from_fn(g, |x| Complex64::from_polar(1.0, k * x));
        let want = mode.scale(Complex64::new(0.0, k) * Complex64::from_polar(1.0, -t * k * k));
        assert!(free_time_space_derivative(&mode, t, 0, 1).unwrap().relative_error(&want) < 1e-13);
    }

    #[test]
    fn guard_rejects_noise_amplification() {
        let g = Grid1D::new(4096, 60.0).unwrap();
        let u0 = Field::from_real_fn(g, |x| (-(1.0 + x * x).sqrt()).exp());
        let err = free_time_space_derivative(&u0, 1.0, 3, 6).unwrap_err();
        assert!(matches!(err, Error::Resolution { order: 12, .. }));
        assert!(free_time_space_derivative(&u0, 1.0, 20, 0).is_err());
    }
}
