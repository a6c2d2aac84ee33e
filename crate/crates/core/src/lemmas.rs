//! Exact evaluators for the multi-index inequalities: the factorial ratio bound,
//! the two convolution-type summation bounds, and randomized sweeps over them.

use std::collections::HashMap;
use std::sync::Arc;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiindex::{decompositions, enumerate_upto, star_dagger, MultiIndex};
use crate::par::{map_indexed, Exec};

/// Relative slack applied to every floating-point "holds" decision.
pub const SLACK: f64 = 1e-9;

/// Index set {|α| ≤ l} with a position lookup.
#[derive(Debug, Clone)]
pub struct IndexLayout {
    pub n: usize,
    pub l: usize,
    pub indices: Vec<MultiIndex>,
    position: HashMap<MultiIndex, usize>,
}

impl IndexLayout {
    pub fn new(n: usize, l: usize) -> Result<Arc<Self>> {
        let indices = enumerate_upto(n, l)?;
        let position = indices.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        Ok(Arc::new(IndexLayout { n, l, indices, position }))
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.position.get(alpha).copied()
    }
}

#[derive(Debug, Clone)]
pub struct IndexedVector {
    pub layout: Arc<IndexLayout>,
    pub values: Vec<f64>,
}

impl IndexedVector {
    pub fn new(layout: Arc<IndexLayout>, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::SizeMismatch { expected: layout.len(), got: values.len() });
        }
        Ok(IndexedVector { layout, values })
    }

    pub fn get(&self, alpha: &MultiIndex) -> f64 {
        self.layout.position(alpha).map_or(0.0, |i| self.values[i])
    }
}

/// Matrix indexed by multi-indices with b(α, β) = 0 unless β ≤ α.
#[derive(Debug, Clone)]
pub struct LowerTriangularIndexedMatrix {
    pub layout: Arc<IndexLayout>,
    entries: Vec<Complex64>,
}

impl LowerTriangularIndexedMatrix {
    pub fn zeros(layout: Arc<IndexLayout>) -> Self {
        let n = layout.len();
        LowerTriangularIndexedMatrix { layout, entries: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    pub fn set(&mut self, alpha: &MultiIndex, beta: &MultiIndex, value: Complex64) -> Result<()> {
        if !beta.le(alpha) {
            return Err(Error::InvalidArgument(format!("entry ({alpha}, {beta}) lies outside the lower triangle")));
        }
        let (i, j) = self.slots(alpha, beta)?;
        let n = self.layout.len();
        self.entries[i * n + j] = value;
        Ok(())
    }

    pub fn get(&self, alpha: &MultiIndex, beta: &MultiIndex) -> Complex64 {
        match (self.layout.position(alpha), self.layout.position(beta)) {
            (Some(i), Some(j)) => self.entries[i * self.layout.len() + j],
            _ => Complex64::new(0.0, 0.0),
        }
    }

    fn slots(&self, alpha: &MultiIndex, beta: &MultiIndex) -> Result<(usize, usize)> {
        let i = self.layout.position(alpha);
        let j = self.layout.position(beta);
        match (i, j) {
            (Some(i), Some(j)) => Ok((i, j)),
            _ => Err(Error::InvalidArgument(format!("index ({alpha}, {beta}) outside the layout"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactCheck {
    pub lhs: Ratio<u128>,
    pub rhs: Ratio<u128>,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Check {
    fn new(lhs: f64, rhs: f64) -> Self {
        Check { lhs, rhs, holds: lhs <= rhs * (1.0 + SLACK) }
    }
}

fn factorial_u128(k: u32) -> Result<u128> {
    (1..=k as u128).try_fold(1u128, |acc, j| acc.checked_mul(j)).ok_or(Error::Overflow("factorial"))
}

fn multi_factorial(alpha: &MultiIndex) -> Result<u128> {
    alpha
        .components()
        .iter()
        .try_fold(1u128, |acc, &a| acc.checked_mul(factorial_u128(a)?).ok_or(Error::Overflow("multi-factorial")))
}

/// Compares ∏|α^j|!/∏α^j! against |α|!/α! for α = Σ α^j, exactly.
pub fn factorial_inequality_check(parts: &[MultiIndex]) -> Result<ExactCheck> {
    let first = parts.first().ok_or_else(|| Error::InvalidArgument("empty part list".into()))?;
    let n = first.dim();
    let mut total = MultiIndex::zero(n);
    for p in parts {
        if p.dim() != n {
            return Err(Error::Dimension(n, p.dim()));
        }
        total = total.add(p);
    }
    let mut num = 1u128;
    let mut den = 1u128;
    for p in parts {
        num = num.checked_mul(factorial_u128(p.order())?).ok_or(Error::Overflow("factorial lhs"))?;
        den = den.checked_mul(multi_factorial(p)?).ok_or(Error::Overflow("factorial lhs"))?;
    }
    let lhs = Ratio::new(num, den);
    let rhs = Ratio::new(factorial_u128(total.order())?, multi_factorial(&total)?);
    Ok(ExactCheck { holds: lhs <= rhs, lhs, rhs })
}

/// sqrt(1 + Σ 1/j²) = sqrt(1 + π²/6) ≈ 1.6263253
pub fn constant_a() -> f64 {
    (1.0 + std::f64::consts::PI * std::f64::consts::PI / 6.0).sqrt()
}

fn decomposition_weight(x: &IndexedVector, alpha: &MultiIndex, parts: usize) -> f64 {
    decompositions(alpha, parts)
        .map(|tuple| tuple.iter().map(|b| x.get(b) / star_dagger(b) as f64).product::<f64>())
        .sum()
}

pub fn summation1_check(x: &IndexedVector, p: usize, q: usize) -> Result<Check> {
    if p < 2 || q < 2 {
        return Err(Error::InvalidArgument(format!("summation check needs p, q >= 2 (got {p}, {q})")));
    }
    if x.values.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::InvalidArgument("summation check needs non-negative X".into()));
    }
    let n = x.layout.n;
    // The double sum over (α(·), β(·)) factorizes into a product of two single sums.
    let lhs: f64 = x
        .layout
        .indices
        .iter()
        .map(|alpha| {
            let w = star_dagger(alpha) as f64;
            w * w * decomposition_weight(x, alpha, p) * decomposition_weight(x, alpha, q)
        })
        .sum();
    let sq: f64 = x.values.iter().map(|v| v * v).sum();
    let a = constant_a();
    let (pf, qf, nf) = (p as f64, q as f64, n as i32);
    let rhs = a.powi(nf * (p + q - 2) as i32) * pf.powi(2 * nf) * qf.powi(2 * nf) * sq.powf((pf + qf) / 2.0);
    Ok(Check::new(lhs, rhs))
}

/// Visits every point of the box ∏[lo_i, hi_i); no visits if any range is empty.
fn for_each_in_box(ranges: &[(u32, u32)], mut f: impl FnMut(&[u32])) {
    if ranges.iter().any(|&(lo, hi)| lo >= hi) {
        return;
    }
    let mut cur: Vec<u32> = ranges.iter().map(|r| r.0).collect();
    loop {
        f(&cur);
        let mut j = 0;
        loop {
            if j == ranges.len() {
                return;
            }
            cur[j] += 1;
            if cur[j] < ranges[j].1 {
                break;
            }
            cur[j] = ranges[j].0;
            j += 1;
        }
    }
}

/// The bound's split factor for one choice of "near-diagonal" coordinates `near`
/// (the remaining coordinates are "far"): a sum over far offsets of the square root
/// of a sum over near offsets and near rows of the max over far rows of |b|².
fn summation2_split(b: &LowerTriangularIndexedMatrix, near: &[bool]) -> f64 {
    let n = near.len();
    let l = b.layout.l as u32;
    let near_ix: Vec<usize> = (0..n).filter(|&i| near[i]).collect();
    let far_ix: Vec<usize> = (0..n).filter(|&i| !near[i]).collect();
    let mut total = 0.0;
    for_each_in_box(&vec![(0, l + 1); far_ix.len()], |far_off| {
        let far_sum: u32 = far_off.iter().sum();
        if far_sum > l {
            return;
        }
        let mut inner = 0.0;
        for_each_in_box(&vec![(1, l + 1); near_ix.len()], |near_off| {
            if near_off.iter().sum::<u32>() > l - far_sum {
                return;
            }
            let mut offset = vec![0u32; n];
            for (&i, &v) in far_ix.iter().zip(far_off) {
                offset[i] = v;
            }
            for (&i, &v) in near_ix.iter().zip(near_off) {
                offset[i] = v;
            }
            let near_rows: Vec<(u32, u32)> = near_ix.iter().map(|&i| (offset[i], 2 * offset[i])).collect();
            let far_rows: Vec<(u32, u32)> = far_ix.iter().map(|&i| (2 * offset[i], l + 1)).collect();
            for_each_in_box(&near_rows, |near_row| {
                let mut best = 0.0f64;
                for_each_in_box(&far_rows, |far_row| {
                    let mut row = vec![0u32; n];
                    for (&i, &v) in near_ix.iter().zip(near_row) {
                        row[i] = v;
                    }
                    for (&i, &v) in far_ix.iter().zip(far_row) {
                        row[i] = v;
                    }
                    if row.iter().sum::<u32>() > l {
                        return;
                    }
                    let col: Vec<u32> = row.iter().zip(&offset).map(|(r, o)| r - o).collect();
                    let entry = b.get(&MultiIndex::new(row), &MultiIndex::new(col));
                    best = best.max(entry.norm_sqr());
                });
                inner += best;
            });
        });
        total += inner.sqrt();
    });
    total
}

pub fn summation2_check(b: &LowerTriangularIndexedMatrix, x: &[Complex64]) -> Result<Check> {
    let layout = &b.layout;
    if x.len() != layout.len() {
        return Err(Error::SizeMismatch { expected: layout.len(), got: x.len() });
    }
    if layout.l < 1 {
        return Err(Error::InvalidArgument("summation2 needs l >= 1".into()));
    }
    let n = layout.n;
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, alpha) in layout.indices.iter().enumerate() {
        for (j, beta) in layout.indices.iter().enumerate() {
            if beta.le(alpha) {
                acc += b.get(alpha, beta) * x[i] * x[j].conj();
            }
        }
    }
    let lhs = acc.norm();
    let mut best = 0.0f64;
    for mask in 0..(1usize << n) {
        let near: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        best = best.max(summation2_split(b, &near));
    }
    let norm_sq: f64 = x.iter().map(|z| z.norm_sqr()).sum();
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    let rhs = 2f64.powi(n as i32) * fact * norm_sq * best;
    Ok(Check::new(lhs, rhs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub name: String,
    pub n: usize,
    pub l: usize,
    pub p: usize,
    pub q: usize,
    pub trials: usize,
    pub violations: usize,
    pub worst_ratio: f64,
}

pub(crate) fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Exhaustive factorial check over all decompositions with n ≤ n_max, |α| ≤ order_max, p ≤ p_max.
/// Returns (cases checked, violations).
pub fn factorial_sweep(n_max: usize, order_max: usize, p_max: usize) -> Result<(u64, u64)> {
    let mut checked = 0;
    let mut bad = 0;
    for n in 1..=n_max {
        for alpha in enumerate_upto(n, order_max)? {
            for p in 1..=p_max {
                for parts in decompositions(&alpha, p) {
                    checked += 1;
                    if !factorial_inequality_check(&parts)?.holds {
                        bad += 1;
                    }
                }
            }
        }
    }
    Ok((checked, bad))
}

/// Random non-negative X: uniform magnitudes with occasional exact zeros.
pub fn random_nonnegative(layout: &Arc<IndexLayout>, rng: &mut impl Rng) -> IndexedVector {
    let values = (0..layout.len())
        .map(|_| if rng.random::<f64>() < 0.15 { 0.0 } else { rng.random::<f64>() })
        .collect();
    IndexedVector { layout: layout.clone(), values }
}

pub fn summation1_sweep(n: usize, l: usize, p: usize, q: usize, trials: usize, seed: u64, exec: Exec) -> Result<SweepSummary> {
    let layout = IndexLayout::new(n, l)?;
    let checks = map_indexed(exec, trials, |t| {
        let mut rng = trial_rng(seed, t as u64);
        summation1_check(&random_nonnegative(&layout, &mut rng), p, q)
    });
    summarize("summation1", n, l, p, q, checks)
}

fn complex_normal(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_lower_triangular(layout: &Arc<IndexLayout>, rng: &mut impl Rng) -> LowerTriangularIndexedMatrix {
    let mut b = LowerTriangularIndexedMatrix::zeros(layout.clone());
    for alpha in &layout.indices {
        for beta in &layout.indices {
            if beta.le(alpha) {
                b.set(alpha, beta, complex_normal(rng)).expect("lower-triangular slot");
            }
        }
    }
    b
}

pub fn summation2_sweep(n: usize, l: usize, trials: usize, seed: u64, exec: Exec) -> Result<SweepSummary> {
    let layout = IndexLayout::new(n, l)?;
    let checks = map_indexed(exec, trials, |t| {
        let mut rng = trial_rng(seed, t as u64);
        let b = random_lower_triangular(&layout, &mut rng);
        let x: Vec<Complex64> = (0..layout.len()).map(|_| complex_normal(&mut rng)).collect();
        summation2_check(&b, &x)
    });
    summarize("summation2", n, l, 0, 0, checks)
}

fn summarize(name: &str, n: usize, l: usize, p: usize, q: usize, checks: Vec<Result<Check>>) -> Result<SweepSummary> {
    let checks = checks.into_iter().collect::<Result<Vec<_>>>()?;
    let worst_ratio = checks
        .iter()
        .map(|c| if c.rhs > 0.0 { c.lhs / c.rhs } else { 0.0 })
        .fold(0.0, f64::max);
    Ok(SweepSummary {
        name: name.into(),
        n,
        l,
        p,
        q,
        trials: checks.len(),
        violations: checks.iter().filter(|c| !c.holds).count(),
        worst_ratio,
    })
}
