//! Sampled witnesses for the Kato–Ponce commutator estimate and the Leibniz rule
//! for the multiplier ⟨D⟩^m. The constants involved are existential, so these
//! reports only track sup-ratios over corpora and compare them between corpora.

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{bessel_potential, dealiased_product, derivative, resolution_guard, sobolev_norm, Field, Grid1D};
use crate::lemmas::trial_rng;
use crate::par::{map_indexed, Exec};

/// Random fields: a Gaussian envelope of width in [w, 2w] times a trig polynomial
/// with modes k·`base_frequency`, |k| ≤ `terms`, and coefficients decaying like 1/(1+|k|).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub grid: Grid1D,
    pub width: f64,
    pub base_frequency: f64,
    pub terms: usize,
}

impl Corpus {
    pub fn standard() -> Self {
        Corpus { grid: Grid1D::new(512, 40.0).expect("valid grid"), width: 1.0, base_frequency: 0.5, terms: 3 }
    }

    pub fn describe(&self) -> String {
        format!(
            "gaussian envelope width [{}, {}] x trig polynomial |k| <= {} step {}, N = {}, L = {}",
            self.width,
            2.0 * self.width,
            self.terms,
            self.base_frequency,
            self.grid.num_points(),
            self.grid.length()
        )
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Field {
        let w = self.width * (1.0 + rng.random::<f64>());
        let k = self.terms as i64;
        let coeffs: Vec<(f64, Complex64)> = (-k..=k)
            .map(|j| {
                let c = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) / (1.0 + j.abs() as f64);
                (j as f64 * self.base_frequency, c)
            })
            .collect();
        Field::from_fn(self.grid, |x| {
            let poly: Complex64 = coeffs.iter().map(|&(freq, c)| c * Complex64::from_polar(1.0, freq * x)).sum();
            poly * (-x * x / (2.0 * w * w)).exp()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub name: String,
    pub trials: usize,
    pub ratios: Vec<f64>,
    pub sup_ratio: f64,
    pub corpus: String,
    pub seed: u64,
}

impl WitnessReport {
    fn new(name: &str, corpus: &Corpus, seed: u64, ratios: Vec<f64>) -> Self {
        let sup_ratio = ratios.iter().cloned().fold(0.0, f64::max);
        WitnessReport { name: name.into(), trials: ratios.len(), ratios, sup_ratio, corpus: corpus.describe(), seed }
    }

    pub fn all_finite(&self) -> bool {
        self.ratios.iter().all(|r| r.is_finite() && *r >= 0.0)
    }
}

/// max(a, b) / min(a, b) ≤ factor, for positive finite a and b.
pub fn stable_within(a: f64, b: f64, factor: f64) -> bool {
    a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0 && a.max(b) / a.min(b) <= factor
}

fn quotient(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// ‖⟨D⟩^θ(fg) − f⟨D⟩^θ g‖ / (‖∂f‖_∞ ‖g‖_{θ−1} + ‖f‖_θ ‖g‖_∞)
pub fn kato_ponce_ratio(f: &Field, g: &Field, theta: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::InvalidArgument(format!("Kato-Ponce needs theta > 0, got {theta}")));
    }
    // the commutator ignores constants, so subtract one sample first; a constant f then gives exactly 0
    let c = f.samples()[0];
    let shifted = f.map(|_, z| z - c);
    let lhs = bessel_potential(&dealiased_product(&shifted, g)?, theta);
    let commuted = dealiased_product(&shifted, &bessel_potential(g, theta))?;
    let num = lhs.sub(&commuted)?.norm();
    let den = derivative(f, 1).sup_norm() * sobolev_norm(g, theta - 1.0, 0.0) + sobolev_norm(f, theta, 0.0) * g.sup_norm();
    Ok(quotient(num, den))
}

fn product(fs: &[&Field]) -> Result<Field> {
    let mut acc = fs[0].clone();
    for f in &fs[1..] {
        acc = dealiased_product(&acc, f)?;
    }
    Ok(acc)
}

/// (chain, Leibniz) ratios for p(D) = ⟨D⟩^m applied to a product of k = fs.len() factors.
pub fn leibniz_ratio(fs: &[Field], m: f64, theta: f64) -> Result<(f64, f64)> {
    if fs.len() < 2 {
        return Err(Error::InvalidArgument(format!("need at least two factors, got {}", fs.len())));
    }
    if !(m >= 1.0) {
        return Err(Error::InvalidArgument(format!("multiplier order must be >= 1, got {m}")));
    }
    if !(theta > 1.5) {
        return Err(Error::InvalidArgument(format!("theta must exceed 3/2, got {theta}")));
    }
    let all: Vec<&Field> = fs.iter().collect();
    let p_prod = bessel_potential(&product(&all)?, m);
    let norm_at = |s: f64| fs.iter().map(|f| sobolev_norm(f, s, 0.0)).collect::<Vec<_>>();
    let (n_m, n_m1, n_theta, n_theta1) = (norm_at(m), norm_at(m - 1.0), norm_at(theta), norm_at(theta - 1.0));
    let others = |nu: usize, norms: &[f64]| norms.iter().enumerate().filter(|&(j, _)| j != nu).map(|(_, v)| v).product::<f64>();
    let mut chain_den = 0.0;
    let mut leib_den = 0.0;
    let mut remainder = p_prod.clone();
    for nu in 0..fs.len() {
        chain_den += n_m[nu] * others(nu, &n_theta1);
        leib_den += n_m1[nu] * others(nu, &n_theta);
        let mut factors: Vec<&Field> = all.iter().enumerate().filter(|&(j, _)| j != nu).map(|(_, f)| *f).collect();
        let pf = bessel_potential(&fs[nu], m);
        factors.push(&pf);
        remainder = remainder.sub(&product(&factors)?)?;
    }
    Ok((quotient(p_prod.norm(), chain_den), quotient(remainder.norm(), leib_den)))
}

/// Kato–Ponce ratios over `trials` pairs drawn from the corpus.
pub fn kato_ponce_sweep(corpus: &Corpus, theta: f64, trials: usize, seed: u64, exec: Exec) -> Result<WitnessReport> {
    let ratios = map_indexed(exec, trials, |t| {
        let mut rng = trial_rng(seed, t as u64);
        let f = corpus.sample(&mut rng);
        let g = corpus.sample(&mut rng);
        resolution_guard(&f, 1)?;
        resolution_guard(&g, 0)?;
        kato_ponce_ratio(&f, &g, theta)
    });
    Ok(WitnessReport::new("kato-ponce", corpus, seed, ratios.into_iter().collect::<Result<_>>()?))
}

/// Chain and Leibniz reports over `trials` k-tuples drawn from the corpus.
pub fn leibniz_sweep(
    corpus: &Corpus,
    factors: usize,
    m: f64,
    theta: f64,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<(WitnessReport, WitnessReport)> {
    let pairs = map_indexed(exec, trials, |t| {
        let mut rng = trial_rng(seed, t as u64);
        let fs: Vec<Field> = (0..factors).map(|_| corpus.sample(&mut rng)).collect();
        leibniz_ratio(&fs, m, theta)
    });
    let pairs = pairs.into_iter().collect::<Result<Vec<_>>>()?;
    let chain = WitnessReport::new(&format!("chain k={factors}"), corpus, seed, pairs.iter().map(|p| p.0).collect());
    let leib = WitnessReport::new(&format!("leibniz k={factors}"), corpus, seed, pairs.iter().map(|p| p.1).collect());
    Ok((chain, leib))
}

/// Per-k roots (sup chain ratio)^{1/k} and (sup Leibniz ratio)^{1/k}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub factors: Vec<usize>,
    pub chain_roots: Vec<f64>,
    pub leibniz_roots: Vec<f64>,
}

impl GrowthReport {
    fn spread(v: &[f64]) -> f64 {
        let max = v.iter().cloned().fold(0.0, f64::max);
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }

    pub fn chain_spread(&self) -> f64 {
        Self::spread(&self.chain_roots)
    }

    pub fn leibniz_spread(&self) -> f64 {
        Self::spread(&self.leibniz_roots)
    }
}

pub fn leibniz_growth(corpus: &Corpus, ks: &[usize], m: f64, theta: f64, trials: usize, seed: u64, exec: Exec) -> Result<GrowthReport> {
    let mut chain_roots = Vec::new();
    let mut leibniz_roots = Vec::new();
    for &k in ks {
        let (c, l) = leibniz_sweep(corpus, k, m, theta, trials, seed, exec)?;
        chain_roots.push(c.sup_ratio.powf(1.0 / k as f64));
        leibniz_roots.push(l.sup_ratio.powf(1.0 / k as f64));
    }
    Ok(GrowthReport { factors: ks.to_vec(), chain_roots, leibniz_roots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> Grid1D {
        Grid1D::new(512, 40.0).unwrap()
    }

    #[test]
    fn constant_factor_gives_zero() {
        let g = grid();
        let c = Field::from_fn(g, |_| Complex64::new(2.5, -1.0));
        let h = Field::from_real_fn(g, |x| (-0.5 * x * x).exp());
        assert_eq!(kato_ponce_ratio(&c, &h, 2.0).unwrap(), 0.0);
        assert!(kato_ponce_ratio(&h, &h, 0.0).is_err());
    }

    #[test]
    fn gaussian_pair_is_finite() {
        let h = Field::from_real_fn(grid(), |x| (-0.5 * x * x).exp());
        let r = kato_ponce_ratio(&h, &h, 2.0).unwrap();
        assert!(r.is_finite() && r > 0.0);
    }

    #[test]
    fn leibniz_zero_and_sech() {
        let g = grid();
        let sech = Field::from_real_fn(g, |x| 1.0 / x.cosh());
        let (c, l) = leibniz_ratio(&[sech.clone(), Field::zeros(g)], 2.0, 2.0).unwrap();
        assert_eq!((c, l), (0.0, 0.0));
        let (c, l) = leibniz_ratio(&[sech.clone(), sech.clone()], 2.0, 2.0).unwrap();
        assert!(c.is_finite() && l.is_finite() && c > 0.0 && l > 0.0);
        assert!(leibniz_ratio(&[sech.clone()], 2.0, 2.0).is_err());
        assert!(leibniz_ratio(&[sech.clone(), sech.clone()], 0.5, 2.0).is_err());
        assert!(leibniz_ratio(&[sech.clone(), sech], 2.0, 1.5).is_err());
    }

    #[test]
    fn corpus_is_resolved_and_reproducible() {
        let corpus = Corpus::standard();
        let a = corpus.sample(&mut trial_rng(11, 3));
        let b = corpus.sample(&mut trial_rng(11, 3));
        assert_eq!(a, b);
        resolution_guard(&a, 4).unwrap();
    }

    #[test]
    fn sweeps_are_mode_independent() {
        let corpus = Corpus::standard();
        let a = kato_ponce_sweep(&corpus, 2.0, 8, 11, Exec::Sequential).unwrap();
        let b = kato_ponce_sweep(&corpus, 2.0, 8, 11, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(a.all_finite());
        assert_eq!(a.sup_ratio, a.ratios.iter().cloned().fold(0.0, f64::max));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn leibniz_symmetric_in_factors(seed in 0u64..1000) {
            let corpus = Corpus::standard();
            let mut rng = trial_rng(seed, 0);
            let fs: Vec<Field> = (0..3).map(|_| corpus.sample(&mut rng)).collect();
            let (c1, l1) = leibniz_ratio(&fs, 2.0, 2.0).unwrap();
            let rev: Vec<Field> = fs.iter().rev().cloned().collect();
            let (c2, l2) = leibniz_ratio(&rev, 2.0, 2.0).unwrap();
            prop_assert!((c1 - c2).abs() <= 1e-12 * c1);
            prop_assert!((l1 - l2).abs() <= 1e-12 * l1);
        }
    }
}
