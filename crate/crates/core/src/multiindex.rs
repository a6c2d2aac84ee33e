//! Multi-indices, their enumeration, and factorial-scale scalars kept in log form.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Div, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Self {
        MultiIndex(components)
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// Unit index with a one in slot `j`.
    pub fn unit(n: usize, j: usize) -> Self {
        let mut c = vec![0; n];
        c[j] = 1;
        MultiIndex(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Componentwise comparison; `None` when the indices are incomparable.
    pub fn compare(&self, other: &MultiIndex) -> Option<Ordering> {
        if self.dim() != other.dim() {
            return None;
        }
        let mut le = true;
        let mut ge = true;
        for (a, b) in self.0.iter().zip(&other.0) {
            le &= a <= b;
            ge &= a >= b;
        }
        match (le, ge) {
            (true, true) => Some(Ordering::Equal),
            (true, false) => Some(Ordering::Less),
            (false, true) => Some(Ordering::Greater),
            (false, false) => None,
        }
    }

    pub fn le(&self, other: &MultiIndex) -> bool {
        matches!(self.compare(other), Some(Ordering::Less | Ordering::Equal))
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), other.dim());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if self.dim() != other.dim() {
            return None;
        }
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// Concatenation of component lists (used for multiplicativity checks).
    pub fn concat(&self, other: &MultiIndex) -> MultiIndex {
        let mut c = self.0.clone();
        c.extend_from_slice(&other.0);
        MultiIndex(c)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Number of n-dimensional indices of order at most l, i.e. C(l+n, n).
pub fn count_upto(n: usize, l: usize) -> usize {
    let mut c: u128 = 1;
    for k in 1..=n as u128 {
        c = c * (l as u128 + k) / k;
    }
    c as usize
}

/// All indices with |α| ≤ l, graded by order and lexicographically
/// descending in the leading component within each order.
pub fn enumerate_upto(n: usize, l: usize) -> Result<Vec<MultiIndex>> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(count_upto(n, l));
    for k in 0..=l as u32 {
        let mut buf = Vec::with_capacity(n);
        compositions_desc(k, n, &mut buf, &mut out);
    }
    Ok(out)
}

fn compositions_desc(k: u32, slots: usize, buf: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if slots == 1 {
        buf.push(k);
        out.push(MultiIndex(buf.clone()));
        buf.pop();
        return;
    }
    for first in (0..=k).rev() {
        buf.push(first);
        compositions_desc(k - first, slots - 1, buf, out);
        buf.pop();
    }
}

pub fn star(alpha: &MultiIndex) -> MultiIndex {
    MultiIndex(alpha.0.iter().map(|&a| a.saturating_sub(1)).collect())
}

pub fn dagger(alpha: &MultiIndex) -> u64 {
    alpha.0.iter().map(|&a| a.max(1) as u64).product()
}

pub fn star_dagger(alpha: &MultiIndex) -> u64 {
    dagger(&star(alpha))
}

/// Product of componentwise binomials C(α, β).
pub fn binomial(alpha: &MultiIndex, beta: &MultiIndex) -> f64 {
    alpha
        .0
        .iter()
        .zip(&beta.0)
        .map(|(&a, &b)| binom(a as u64, b as u64))
        .product()
}

pub fn binom(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0f64;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c.round()
}

pub fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// A non-negative real stored through its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogReal {
    pub is_zero: bool,
    pub log_mag: f64,
}

impl LogReal {
    pub const ZERO: LogReal = LogReal { is_zero: true, log_mag: 0.0 };
    pub const ONE: LogReal = LogReal { is_zero: false, log_mag: 0.0 };

    pub fn from_ln(log_mag: f64) -> Self {
        LogReal { is_zero: false, log_mag }
    }

    /// Panics on negative or NaN input.
    pub fn from_f64(x: f64) -> Self {
        assert!(x >= 0.0, "LogReal requires a non-negative value, got {x}");
        if x == 0.0 {
            LogReal::ZERO
        } else {
            LogReal::from_ln(x.ln())
        }
    }

    pub fn to_f64(self) -> f64 {
        if self.is_zero {
            0.0
        } else {
            self.log_mag.exp()
        }
    }

    pub fn ln(self) -> f64 {
        if self.is_zero {
            f64::NEG_INFINITY
        } else {
            self.log_mag
        }
    }

    pub fn powf(self, p: f64) -> Self {
        if self.is_zero {
            if p == 0.0 {
                LogReal::ONE
            } else {
                LogReal::ZERO
            }
        } else {
            LogReal::from_ln(self.log_mag * p)
        }
    }

    pub fn add(self, other: LogReal) -> LogReal {
        match (self.is_zero, other.is_zero) {
            (true, _) => other,
            (_, true) => self,
            _ => {
                let (hi, lo) = if self.log_mag >= other.log_mag {
                    (self.log_mag, other.log_mag)
                } else {
                    (other.log_mag, self.log_mag)
                };
                LogReal::from_ln(hi + (lo - hi).exp().ln_1p())
            }
        }
    }
}

impl Mul for LogReal {
    type Output = LogReal;
    fn mul(self, rhs: LogReal) -> LogReal {
        if self.is_zero || rhs.is_zero {
            LogReal::ZERO
        } else {
            LogReal::from_ln(self.log_mag + rhs.log_mag)
        }
    }
}

impl Div for LogReal {
    type Output = LogReal;
    fn div(self, rhs: LogReal) -> LogReal {
        assert!(!rhs.is_zero, "LogReal division by zero");
        if self.is_zero {
            LogReal::ZERO
        } else {
            LogReal::from_ln(self.log_mag - rhs.log_mag)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorialKind {
    /// α! = ∏ α_j!
    Plain,
    /// α_*! = ∏ max{α_j − 1, 0}!
    Star,
    /// |α|!
    Total,
}

pub fn log_factorial_power(alpha: &MultiIndex, s: f64, kind: FactorialKind) -> LogReal {
    let ln = match kind {
        FactorialKind::Plain => alpha.0.iter().map(|&a| ln_factorial(a as u64)).sum(),
        FactorialKind::Star => alpha.0.iter().map(|&a| ln_factorial(a.saturating_sub(1) as u64)).sum(),
        FactorialKind::Total => ln_factorial(alpha.order() as u64),
    };
    LogReal::from_ln(ln * s)
}

/// Ordered p-tuples of indices summing to a fixed index.
pub struct Decompositions {
    per_component: Vec<Vec<Vec<u32>>>,
    cursor: Vec<usize>,
    parts: usize,
    done: bool,
}

pub fn decompositions(alpha: &MultiIndex, p: usize) -> Decompositions {
    assert!(p >= 1, "part count must be positive");
    let per_component: Vec<Vec<Vec<u32>>> = alpha
        .0
        .iter()
        .map(|&a| {
            let mut out = Vec::new();
            let mut buf = Vec::with_capacity(p);
            scalar_compositions(a, p, &mut buf, &mut out);
            out
        })
        .collect();
    let n = per_component.len();
    Decompositions { per_component, cursor: vec![0; n], parts: p, done: false }
}

fn scalar_compositions(k: u32, slots: usize, buf: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if slots == 1 {
        buf.push(k);
        out.push(buf.clone());
        buf.pop();
        return;
    }
    for first in 0..=k {
        buf.push(first);
        scalar_compositions(k - first, slots - 1, buf, out);
        buf.pop();
    }
}

impl Iterator for Decompositions {
    type Item = Vec<MultiIndex>;

    fn next(&mut self) -> Option<Vec<MultiIndex>> {
        if self.done {
            return None;
        }
        let n = self.per_component.len();
        let item = (0..self.parts)
            .map(|part| MultiIndex((0..n).map(|j| self.per_component[j][self.cursor[j]][part]).collect()))
            .collect();
        // odometer, last component fastest
        let mut j = n;
        loop {
            if j == 0 {
                self.done = true;
                break;
            }
            j -= 1;
            self.cursor[j] += 1;
            if self.cursor[j] < self.per_component[j].len() {
                break;
            }
            self.cursor[j] = 0;
        }
        Some(item)
    }
}

pub fn decomposition_count(alpha: &MultiIndex, p: usize) -> u128 {
    alpha
        .0
        .iter()
        .map(|&a| binom(a as u64 + p as u64 - 1, p as u64 - 1) as u128)
        .product()
}
