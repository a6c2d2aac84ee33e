//! Catalog of initial profiles.
//!
//! Largest Gevrey exponent s for which e^{ε⟨x⟩^{1/s}} u0 stays in H^θ for small ε:
//! gaussian allows s = 1/2, sech and exp-bracket(ε, 1) allow s = 1, and poly(k)
//! belongs to no exponential class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Profile {
    /// e^{-x²/(2w²)}
    Gaussian { width: f64 },
    /// sech(λx)
    Sech { lambda: f64 },
    /// e^{-ε⟨x⟩^{1/s}}
    ExpBracket { epsilon: f64, s: f64 },
    /// ⟨x⟩^{-k}
    Poly { k: f64 },
}

impl Profile {
    /// Parses "gaussian", "sech", "exp-bracket" or "poly" with its parameters in order.
    pub fn from_name(kind: &str, params: &[f64]) -> Result<Self> {
        let need = |n: usize| {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::Config(format!("profile {kind} takes {n} parameter(s), got {}", params.len())))
            }
        };
        let p = match kind {
            "gaussian" => {
                need(1)?;
                Profile::Gaussian { width: params[0] }
            }
            "sech" => {
                need(1)?;
                Profile::Sech { lambda: params[0] }
            }
            "exp-bracket" => {
                need(2)?;
                Profile::ExpBracket { epsilon: params[0], s: params[1] }
            }
            "poly" => {
                need(1)?;
                Profile::Poly { k: params[0] }
            }
            other => return Err(Error::Config(format!("unknown profile kind '{other}'"))),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Profile::Gaussian { .. } => "gaussian",
            Profile::Sech { .. } => "sech",
            Profile::ExpBracket { .. } => "exp-bracket",
            Profile::Poly { .. } => "poly",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Profile::Gaussian { width } => width > 0.0,
            Profile::Sech { lambda } => lambda > 0.0,
            Profile::ExpBracket { epsilon, s } => epsilon > 0.0 && s > 0.0,
            Profile::Poly { k } => k > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid parameters for profile {self:?}")))
        }
    }

    /// Largest s with e^{ε⟨x⟩^{1/s}}u0 ∈ H^θ for some ε > 0; None for polynomial decay.
    pub fn max_gevrey_exponent(&self) -> Option<f64> {
        match *self {
            Profile::Gaussian { .. } => Some(0.5),
            Profile::Sech { .. } => Some(1.0),
            Profile::ExpBracket { s, .. } => Some(s),
            Profile::Poly { .. } => None,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Profile::Gaussian { width } => (-x * x / (2.0 * width * width)).exp(),
            Profile::Sech { lambda } => 1.0 / (lambda * x).cosh(),
            Profile::ExpBracket { epsilon, s } => (-epsilon * (1.0 + x * x).sqrt().powf(1.0 / s)).exp(),
            Profile::Poly { k } => (1.0 + x * x).powf(-0.5 * k),
        }
    }

    pub fn sample(&self, grid: Grid1D) -> Field {
        Field::from_real_fn(grid, |x| self.value(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::in_exponential_class;

    #[test]
    fn catalog_examples() {
        let g = Grid1D::new(4096, 200.0).unwrap();
        assert_eq!(Profile::Gaussian { width: 1.0 }.value(0.0), 1.0);
        let sech = Profile::Sech { lambda: 1.0 }.sample(g);
        assert!((sech.norm().powi(2) - 2.0).abs() < 1e-10);
        let poly = Profile::Poly { k: 3.0 }.sample(g);
        assert!(!in_exponential_class(&poly, 1.0, 1.0));
        assert!(Profile::Poly { k: 3.0 }.max_gevrey_exponent().is_none());
    }

    #[test]
    fn parsing() {
        assert_eq!(Profile::from_name("exp-bracket", &[1.0, 1.0]).unwrap(), Profile::ExpBracket { epsilon: 1.0, s: 1.0 });
        assert!(Profile::from_name("lorentzian", &[1.0]).is_err());
        assert!(Profile::from_name("sech", &[]).is_err());
        assert!(Profile::from_name("gaussian", &[-1.0]).is_err());
        let t: Profile = toml::from_str("kind = \"sech\"\nlambda = 2.0").unwrap();
        assert_eq!(t, Profile::Sech { lambda: 2.0 });
    }
}
