//! Weighted derivative norms ‖⟨x⟩^{-α-2m} ∂_t^m ∂^α u(t)‖_θ for free and gauge
//! solutions, and the fits that turn them into Gevrey constants.
//!
//! Each weighted derivative ⟨x⟩^{-k} ∂^k u is computed spectrally while the result
//! passes the resolution guard, and otherwise from the J-fields through
//!
//!   ∂^k u = Σ_β C(k,β) (2it)^{-(k-β)} J^{k-β}u · H_β,
//!   H_β = Σ_{γ ≤ β/2} β!/(γ!(β-2γ)!) (i/4t)^{β-γ} (2x)^{β-2γ},
//!
//! where every factor H_β ⟨x⟩^{-k} stays bounded on the grid.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galilean::{apply_j_free_all, moment};
use crate::gauge::{mass_phase, GaugeRun};
use crate::grid::{
    boundary_mass_ratio, derivative, escalate, resolution_guard, sobolev_norm, weight_apply, Field, Grid1D, BOUNDARY_TOL,
};
use crate::multiindex::{binom, ln_factorial};
use crate::par::{map_indexed, Exec};
use crate::propagator::{free_time_space_derivative, FreeSolution};
use crate::lemmas::trial_rng;
use crate::warning::{Mode, Warning};
use crate::witness::Corpus;

const HERMITE_MAX: usize = 40;

/// e^{-ix²/4t} ∂^β e^{ix²/4t} sampled on the grid.
pub fn hermite_factor(beta: usize, t: f64, grid: Grid1D) -> Result<Field> {
    weighted_hermite_factor(beta, 0, t, grid)
}

/// H_β ⟨x⟩^{-weight}, with magnitudes combined in log form before exponentiating.
pub fn weighted_hermite_factor(beta: usize, weight: usize, t: f64, grid: Grid1D) -> Result<Field> {
    if t == 0.0 || !t.is_finite() {
        return Err(Error::InvalidArgument("hermite factor needs t != 0".into()));
    }
    if beta > HERMITE_MAX {
        return Err(Error::InvalidArgument(format!("hermite order {beta} exceeds {HERMITE_MAX}")));
    }
    let terms: Vec<(f64, Complex64, usize)> = (0..=beta / 2)
        .map(|g| {
            let ln_c = ln_factorial(beta as u64) - ln_factorial(g as u64) - ln_factorial((beta - 2 * g) as u64)
                - (beta - g) as f64 * (4.0 * t.abs()).ln();
            let phase = unit_phase(t, (beta - g) as i32);
            (ln_c, phase, beta - 2 * g)
        })
        .collect();
    Ok(Field::from_fn(grid, |x| {
        let ln_w = -0.5 * weight as f64 * (1.0 + x * x).ln();
        let ln_2x = (2.0 * x).abs().ln();
        let mut acc = Complex64::new(0.0, 0.0);
        for &(ln_c, phase, p) in &terms {
            if p == 0 {
                acc += phase * (ln_c + ln_w).exp();
            } else if x != 0.0 {
                let sign = if x < 0.0 && p % 2 == 1 { -1.0 } else { 1.0 };
                acc += phase * sign * (ln_c + ln_w + p as f64 * ln_2x).exp();
            }
        }
        acc
    }))
}

/// (i·sgn t)^power
fn unit_phase(t: f64, power: i32) -> Complex64 {
    let base = if t > 0.0 { Complex64::i() } else { -Complex64::i() };
    base.powi(power)
}

/// ⟨x⟩^{-k} ∂^k u from J^0 u, …, J^k u at time t.
pub fn weighted_derivative_via_j(j_values: &[Field], order: usize, t: f64) -> Result<Field> {
    if j_values.len() <= order {
        return Err(Error::InvalidArgument(format!("need J^0..J^{order}, got {} fields", j_values.len())));
    }
    if t == 0.0 {
        return Err(Error::InvalidArgument("Hermite conversion needs t != 0".into()));
    }
    let grid = j_values[0].grid();
    let mut acc = Field::zeros(grid);
    for beta in 0..=order {
        let shift = order - beta;
        let h = weighted_hermite_factor(beta, order, t, grid)?;
        // C(k,β) (2it)^{-(k-β)}
        let c = binom(order as u64, beta as u64) * (2.0 * t.abs()).powi(-(shift as i32));
        let coef = unit_phase(t, -(shift as i32)) * c;
        let term = j_values[shift].mul(&h)?;
        acc.axpy(coef, &term);
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Path {
    Spectral,
    Hermite,
}

impl Path {
    pub fn as_str(self) -> &'static str {
        match self {
            Path::Spectral => "spectral",
            Path::Hermite => "hermite",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub m: usize,
    pub alpha: usize,
    pub t: f64,
    pub value: f64,
    /// (value t^k / (m!^{2s} α!^σ))^{1/k}, k = α + 2m, with the table's s and σ; absent for k = 0.
    pub radical: Option<f64>,
    /// value t^k / (ρ^k m!^{2s} α!^σ) once a fit has been attached.
    pub ratio: Option<f64>,
    pub path: Path,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingRow {
    pub m: usize,
    pub alpha: usize,
    pub t: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormTable {
    pub theta: f64,
    pub s: f64,
    pub sigma: f64,
    pub rows: Vec<NormRow>,
    pub missing: Vec<MissingRow>,
    pub warnings: Vec<Warning>,
}

/// ln(m!^{2s} α!^σ)
fn ln_normalizer(m: usize, alpha: usize, s: f64, sigma: f64) -> f64 {
    2.0 * s * ln_factorial(m as u64) + sigma * ln_factorial(alpha as u64)
}

/// ln(value t^k / (m!^{2s} α!^σ))
fn ln_scaled(value: f64, t: f64, m: usize, alpha: usize, s: f64, sigma: f64) -> f64 {
    let k = (alpha + 2 * m) as f64;
    value.ln() + k * t.abs().ln() - ln_normalizer(m, alpha, s, sigma)
}

pub fn raw_radical(value: f64, t: f64, m: usize, alpha: usize, s: f64, sigma: f64) -> Option<f64> {
    let k = alpha + 2 * m;
    if k == 0 || t == 0.0 {
        return None;
    }
    if value == 0.0 {
        return Some(0.0);
    }
    Some((ln_scaled(value, t, m, alpha, s, sigma) / k as f64).exp())
}

impl NormTable {
    pub fn row(&self, m: usize, alpha: usize, t: f64) -> Option<&NormRow> {
        self.rows.iter().find(|r| r.m == m && r.alpha == alpha && r.t == t)
    }

    pub fn expected_rows(&self) -> usize {
        self.rows.len() + self.missing.len()
    }

    pub fn present_fraction(&self) -> f64 {
        let n = self.expected_rows();
        if n == 0 {
            0.0
        } else {
            self.rows.len() as f64 / n as f64
        }
    }

    pub fn attach_fit(&mut self, fit: &GevreyFit) {
        for row in &mut self.rows {
            let k = row.alpha + 2 * row.m;
            row.ratio = if row.t == 0.0 || row.value == 0.0 {
                None
            } else {
                let ln = ln_scaled(row.value, row.t, row.m, row.alpha, fit.s, fit.sigma) - k as f64 * fit.rho.ln();
                Some(ln.exp())
            };
        }
    }

    fn push(&mut self, m: usize, alpha: usize, t: f64, value: f64, path: Path, warning: Option<String>) {
        let radical = raw_radical(value, t, m, alpha, self.s, self.sigma);
        self.rows.push(NormRow { m, alpha, t, value, radical, ratio: None, path, warning });
    }
}

/// Settings shared by both table builders.
#[derive(Debug, Clone, PartialEq)]
pub struct TableSpec {
    pub theta: f64,
    pub s: f64,
    pub sigma: f64,
    pub times: Vec<f64>,
    pub m_max: usize,
    pub alpha_max: usize,
    pub mode: Mode,
    pub exec: Exec,
}

/// Weighted derivatives ⟨x⟩^{-k}∂^k of a free solution for k ≤ max, with the path used.
struct WeightedLadder {
    fields: Vec<Field>,
    paths: Vec<Path>,
    /// First order at which the spectral path was rejected, if any.
    crossover: Option<usize>,
}

impl WeightedLadder {
    /// Hermite path used anywhere at or below `order`.
    fn path_upto(&self, order: usize) -> Path {
        if self.paths[..=order].contains(&Path::Hermite) {
            Path::Hermite
        } else {
            Path::Spectral
        }
    }
}

/// Per-order moment boundary ratios for x^j u0, j ≤ max.
fn moment_boundary(u0: &Field, max: usize) -> Vec<f64> {
    (0..=max).map(|j| boundary_mass_ratio(&moment(u0, j))).collect()
}

fn free_ladder(sol: &FreeSolution, t: f64, max: usize, exec: Exec) -> Result<WeightedLadder> {
    let direct: Vec<Option<Field>> = map_indexed(exec, max + 1, |k| {
        free_time_space_derivative(sol.initial(), t, 0, k).ok().map(|d| weight_apply(&d, -(k as f64)))
    });
    let crossover = direct.iter().position(Option::is_none);
    let mut fields = Vec::with_capacity(max + 1);
    let mut paths = Vec::with_capacity(max + 1);
    let j_fields = match crossover {
        Some(_) if t != 0.0 => Some(apply_j_free_all(sol, t, max, exec)),
        _ => None,
    };
    let hermite: Vec<Option<Result<Field>>> = map_indexed(exec, max + 1, |k| match (&direct[k], &j_fields) {
        (None, Some(js)) => Some(weighted_derivative_via_j(&js[..=k], k, t)),
        _ => None,
    });
    for (k, (d, h)) in direct.into_iter().zip(hermite).enumerate() {
        match (d, h) {
            (Some(f), _) => {
                fields.push(f);
                paths.push(Path::Spectral);
            }
            (None, Some(h)) => {
                fields.push(h?);
                paths.push(Path::Hermite);
            }
            (None, None) => {
                // t = 0: no conversion available; stop the ladder here.
                let _ = k;
                break;
            }
        }
    }
    Ok(WeightedLadder { fields, paths, crossover })
}

/// Row-level note (lenient) or refusal (strict) from moment boundary ratios.
fn moment_verdict(ratios: &[f64], upto: usize, mode: Mode) -> std::result::Result<Option<String>, String> {
    match ratios[..=upto].iter().enumerate().find(|(_, &r)| r > BOUNDARY_TOL) {
        None => Ok(None),
        Some((j, r)) => {
            let msg = format!("moment x^{j}u0 boundary ratio {r:.2e}");
            match mode {
                Mode::Lenient => Ok(Some(msg)),
                Mode::Strict => Err(msg),
            }
        }
    }
}

/// log of max|e^{ε⟨x⟩^{1/s}} u0| in the outer 5% minus the log of its overall max.
pub fn exponential_weight_log_ratio(u0: &Field, epsilon: f64, s: f64) -> f64 {
    let g = u0.grid();
    let cut = 0.45 * g.length();
    let mut all = f64::NEG_INFINITY;
    let mut edge = f64::NEG_INFINITY;
    for (j, z) in u0.samples().iter().enumerate() {
        let x = g.x(j);
        let v = z.norm().ln() + epsilon * (1.0 + x * x).sqrt().powf(1.0 / s);
        all = all.max(v);
        if x.abs() >= cut {
            edge = edge.max(v);
        }
    }
    if all == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        edge - all
    }
}

/// Whether e^{ε⟨x⟩^{1/s}}u0 is negligible at the grid edge.
pub fn in_exponential_class(u0: &Field, epsilon: f64, s: f64) -> bool {
    exponential_weight_log_ratio(u0, epsilon, s) <= BOUNDARY_TOL.ln()
}

fn exponential_class_check(u0: &Field, epsilon: f64, s: f64, mode: Mode) -> Result<Option<Warning>> {
    let ratio = exponential_weight_log_ratio(u0, epsilon, s).exp();
    escalate(ratio, mode, &format!("exponential weight eps={epsilon} s={s}"))
}

pub fn norm_table_free(u0: &Field, epsilon: f64, spec: &TableSpec) -> Result<NormTable> {
    let mut table = NormTable { theta: spec.theta, s: spec.s, sigma: spec.sigma, rows: vec![], missing: vec![], warnings: vec![] };
    table.warnings.extend(exponential_class_check(u0, epsilon, spec.s, spec.mode)?);
    let max_order = spec.alpha_max + 2 * spec.m_max;
    let moments = moment_boundary(u0, max_order);
    let sol = FreeSolution::new(u0.clone());
    let ladders: Vec<Result<WeightedLadder>> =
        map_indexed(spec.exec, spec.times.len(), |i| free_ladder(&sol, spec.times[i], max_order, spec.exec));
    for (&t, ladder) in spec.times.iter().zip(ladders) {
        let ladder = ladder?;
        if let Some(order) = ladder.crossover {
            table.warnings.push(Warning::Crossover { context: format!("free t={t}"), order });
        }
        let norms: Vec<f64> = map_indexed(spec.exec, ladder.fields.len(), |k| sobolev_norm(&ladder.fields[k], spec.theta, 0.0));
        for m in 0..=spec.m_max {
            for alpha in 0..=spec.alpha_max {
                let k = alpha + 2 * m;
                if k >= ladder.fields.len() {
                    table.missing.push(MissingRow { m, alpha, t, reason: format!("order {k} unresolved and no Hermite conversion at t = {t}") });
                    continue;
                }
                let path = ladder.path_upto(k);
                let note = if path == Path::Hermite { moment_verdict(&moments, k, spec.mode) } else { Ok(None) };
                match note {
                    Ok(w) => table.push(m, alpha, t, norms[k], path, w),
                    Err(reason) => table.missing.push(MissingRow { m, alpha, t, reason }),
                }
            }
        }
    }
    Ok(table)
}

/// Weighted derivatives of the gauge factor g = e^{iaφ}, of ρ = |v|², of u = g v and of
/// u_t = g w with w = i v_xx − a(v_x v̄ − v v̄_x) v, all from the weighted ladder of v.
struct GaugeWeighted {
    u: Vec<Field>,
    ut: Vec<Field>,
}

fn gauge_weighted(a: f64, v: &Field, wv: &[Field], alpha_max: usize) -> Result<GaugeWeighted> {
    let grid = v.grid();
    let wc: Vec<Field> = wv.iter().map(Field::conj).collect();
    let inv_w = Field::from_real_fn(grid, |x| 1.0 / (1.0 + x * x).sqrt());
    let c = |x: f64| Complex64::new(x, 0.0);
    let kmax = alpha_max;
    // W_γ ρ = Σ_δ C(γ,δ) W_δ v · conj(W_{γ-δ} v)
    let mut wrho = Vec::with_capacity(kmax + 1);
    for gamma in 0..=kmax {
        let mut acc = Field::zeros(grid);
        for d in 0..=gamma {
            acc.axpy(c(binom(gamma as u64, d as u64)), &wv[d].mul(&wc[gamma - d])?);
        }
        wrho.push(acc);
    }
    // W_β g = ia Σ_{c<β} C(β-1,c) W_c ρ · W_{β-1-c} g / ⟨x⟩
    let phi = mass_phase(v, Default::default());
    let mut wg = vec![phi.map(|_, p| Complex64::from_polar(1.0, a * p.re))];
    for beta in 1..=kmax {
        let mut acc = Field::zeros(grid);
        for cc in 0..beta {
            acc.axpy(c(binom(beta as u64 - 1, cc as u64)), &wrho[cc].mul(&wg[beta - 1 - cc])?);
        }
        wg.push(acc.mul(&inv_w)?.scale(Complex64::new(0.0, a)));
    }
    let leibniz = |left: &[Field], right: &dyn Fn(usize) -> Result<Field>, alpha: usize| -> Result<Field> {
        let mut acc = Field::zeros(grid);
        for beta in 0..=alpha {
            acc.axpy(c(binom(alpha as u64, beta as u64)), &left[beta].mul(&right(alpha - beta)?)?);
        }
        Ok(acc)
    };
    let u = (0..=kmax).map(|alpha| leibniz(&wg, &|j| Ok(wv[j].clone()), alpha)).collect::<Result<Vec<_>>>()?;
    // ⟨x⟩^{-(j+2)} ∂^j w
    let wq = |j: usize| -> Result<Field> {
        let mut cubic = Field::zeros(grid);
        for p in 0..=j {
            for q in 0..=j - p {
                let r = j - p - q;
                let multinom = (ln_factorial(j as u64) - ln_factorial(p as u64) - ln_factorial(q as u64) - ln_factorial(r as u64)).exp().round();
                let bracket = wv[p + 1].mul(&wc[q])?.sub(&wv[q].mul(&wc[p + 1])?)?;
                cubic.axpy(c(multinom), &bracket.mul(&wv[r])?);
            }
        }
        let mut out = wv[j + 2].scale(Complex64::i());
        out.axpy(c(-a), &cubic.mul(&inv_w)?);
        Ok(out)
    };
    let ut = (0..=kmax).map(|alpha| leibniz(&wg, &wq, alpha)).collect::<Result<Vec<_>>>()?;
    Ok(GaugeWeighted { u, ut })
}

/// Gauge table with m ∈ {0, 1}; `spec.m_max` above 1 is clamped.
pub fn norm_table_gauge(run: &GaugeRun, spec: &TableSpec) -> Result<NormTable> {
    let mut table = NormTable { theta: spec.theta, s: spec.s, sigma: spec.sigma, rows: vec![], missing: vec![], warnings: run.warnings.clone() };
    let m_max = spec.m_max.min(1);
    if spec.m_max > 1 {
        table.warnings.push(Warning::Note { context: "gauge table".into(), message: "time orders above 1 are not computed".into() });
    }
    let max_order = spec.alpha_max + 3;
    let moments = moment_boundary(&run.v0, max_order);
    let sol = FreeSolution::new(run.v0.clone());
    let per_time: Vec<Result<(WeightedLadder, Option<GaugeWeighted>)>> = map_indexed(spec.exec, spec.times.len(), |i| {
        let t = spec.times[i];
        let ladder = free_ladder(&sol, t, max_order, Exec::Sequential)?;
        let weighted = if ladder.fields.len() == max_order + 1 {
            Some(gauge_weighted(run.a, &sol.at(t), &ladder.fields, spec.alpha_max)?)
        } else {
            None
        };
        Ok((ladder, weighted))
    });
    for (&t, item) in spec.times.iter().zip(per_time) {
        let (ladder, weighted) = item?;
        if let Some(order) = ladder.crossover {
            table.warnings.push(Warning::Crossover { context: format!("gauge t={t}"), order });
        }
        let Some(weighted) = weighted else {
            for m in 0..=m_max {
                for alpha in 0..=spec.alpha_max {
                    table.missing.push(MissingRow { m, alpha, t, reason: format!("weighted ladder incomplete at t = {t}") });
                }
            }
            continue;
        };
        for m in 0..=m_max {
            let source = if m == 0 { &weighted.u } else { &weighted.ut };
            let norms: Vec<f64> = map_indexed(spec.exec, spec.alpha_max + 1, |alpha| sobolev_norm(&source[alpha], spec.theta, 0.0));
            for alpha in 0..=spec.alpha_max {
                // highest v-order entering the row: α for m = 0, α + 2 for m = 1
                let top = alpha + 2 * m;
                let path = ladder.path_upto(top);
                let note = if path == Path::Hermite { moment_verdict(&moments, top, spec.mode) } else { Ok(None) };
                match note {
                    Ok(w) => table.push(m, alpha, t, norms[alpha], path, w),
                    Err(reason) => table.missing.push(MissingRow { m, alpha, t, reason }),
                }
            }
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub alpha_min: usize,
    pub alpha_max: usize,
}

impl FitWindow {
    pub fn contains(&self, alpha: usize) -> bool {
        (self.alpha_min..=self.alpha_max).contains(&alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadicalEntry {
    pub m: usize,
    pub alpha: usize,
    pub t: f64,
    pub radical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GevreyFit {
    pub s: f64,
    pub sigma: f64,
    pub window: FitWindow,
    #[serde(rename = "M")]
    pub m_const: f64,
    pub rho: f64,
    /// Radicals of value/A(t), A(t) being the (m, α) = (0, 0) value at the same t.
    pub radicals: Vec<RadicalEntry>,
    pub spread: f64,
}

/// Max-radical fit over rows with α in the window and α + 2m > 0.
pub fn gevrey_fit(table: &NormTable, s: f64, sigma: f64, window: FitWindow) -> Result<GevreyFit> {
    let mut radicals = Vec::new();
    let mut scaled = Vec::new();
    for row in &table.rows {
        let k = row.alpha + 2 * row.m;
        if !window.contains(row.alpha) || k == 0 || row.t == 0.0 {
            continue;
        }
        let base = table
            .row(0, 0, row.t)
            .ok_or_else(|| Error::InvalidArgument(format!("no amplitude row (m = α = 0) at t = {}", row.t)))?
            .value;
        let ln_y = ln_scaled(row.value, row.t, row.m, row.alpha, s, sigma);
        let r = ((ln_y - base.ln()) / k as f64).exp();
        radicals.push(RadicalEntry { m: row.m, alpha: row.alpha, t: row.t, radical: r });
        scaled.push((k, ln_y));
    }
    if radicals.is_empty() {
        return Err(Error::InvalidArgument("fit window contains no rows".into()));
    }
    let rho = radicals.iter().map(|e| e.radical).fold(0.0, f64::max);
    let min = radicals.iter().map(|e| e.radical).fold(f64::INFINITY, f64::min);
    let m_const = scaled.iter().map(|&(k, ln_y)| (ln_y - k as f64 * rho.ln()).exp()).fold(0.0, f64::max);
    Ok(GevreyFit { s, sigma, window, m_const, rho, radicals, spread: rho / min })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub epsilon: f64,
    pub s: f64,
    pub theta: f64,
    pub log_q: Vec<f64>,
    pub q_alpha: Vec<f64>,
    pub q: f64,
    pub spread: f64,
    pub warnings: Vec<Warning>,
}

/// q_α = (‖x^α u0‖_θ / (‖e^{ε⟨x⟩^{1/s}}u0‖_θ α!^s))^{1/(α+1)} for α ≤ alpha_max.
pub fn decay_fit(u0: &Field, epsilon: f64, s: f64, theta: f64, alpha_max: usize, mode: Mode) -> Result<DecayFit> {
    let mut warnings: Vec<Warning> = exponential_class_check(u0, epsilon, s, mode)?.into_iter().collect();
    let weighted = u0.map(|x, z| z * (epsilon * (1.0 + x * x).sqrt().powf(1.0 / s)).exp());
    if weighted.samples().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidArgument("exponential weight overflows on the grid".into()));
    }
    let den = sobolev_norm(&weighted, theta, 0.0);
    if den == 0.0 {
        return Err(Error::InvalidArgument("zero datum".into()));
    }
    let mut log_q = Vec::with_capacity(alpha_max + 1);
    for alpha in 0..=alpha_max {
        let num = sobolev_norm(&moment(u0, alpha), theta, 0.0);
        let ln = (num.ln() - den.ln() - s * ln_factorial(alpha as u64)) / (alpha + 1) as f64;
        log_q.push(ln);
        if boundary_mass_ratio(&moment(u0, alpha)) > BOUNDARY_TOL && warnings.len() < 2 {
            warnings.push(Warning::Note { context: "decay fit".into(), message: format!("moment x^{alpha}u0 not negligible at the edge") });
        }
    }
    let q_alpha: Vec<f64> = log_q.iter().map(|l| l.exp()).collect();
    let q = q_alpha.iter().cloned().fold(0.0, f64::max);
    let min = q_alpha.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(DecayFit { epsilon, s, theta, log_q, q_alpha, q, spread: q / min, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightCheck {
    /// ‖⟨x⟩^{-k} ∂_t^m ∂^{α+1} u‖_{θ-1}, k = α + 2m
    pub lhs_first: f64,
    /// ‖⟨x⟩^{-k} ∂_t^m ∂^α u‖_θ
    pub base_first: f64,
    /// smallest C_0 with lhs_first ≤ C_0 (k)_+ base_first
    pub c0_first: f64,
    /// ‖⟨x⟩^{-2} ∂(⟨x⟩^{-k} ∂_t^m ∂^{α+1} u)‖_{θ-1}
    pub lhs_second: f64,
    /// ‖⟨x⟩^{-k-2} ∂_t^m ∂^{α+2} u‖_{θ-1}
    pub lead_second: f64,
    /// ‖⟨x⟩^{-k-1} ∂_t^m ∂^{α+1} u‖_{θ-1}
    pub base_second: f64,
    pub c0_second: f64,
}

/// Both weight-commutator bounds for a resolved snapshot u of a free solution, where
/// ∂_t^m ∂^α u = i^m ∂^{α+2m} u. Only the input is guarded: roundoff in the high modes
/// of order-10 derivatives changes the norms far below the precision a fitted constant needs.
pub fn weight_commutator_check(u: &Field, alpha: usize, m: usize, theta: f64) -> Result<WeightCheck> {
    resolution_guard(u, 0)?;
    let k = alpha + 2 * m;
    let kplus = k.max(1) as f64;
    // the i^m phase drops out of every norm
    let d = |extra: usize| derivative(u, k + extra);
    let (d0, d1, d2) = (d(0), d(1), d(2));
    let w = |f: &Field, p: usize| weight_apply(f, -(p as f64));
    let lhs_first = sobolev_norm(&w(&d1, k), theta - 1.0, 0.0);
    let base_first = sobolev_norm(&w(&d0, k), theta, 0.0);
    let c0_first = ratio_or_zero(lhs_first, kplus * base_first);
    let lhs_second = sobolev_norm(&w(&derivative(&w(&d1, k), 1), 2), theta - 1.0, 0.0);
    let lead_second = sobolev_norm(&w(&d2, k + 2), theta - 1.0, 0.0);
    let base_second = sobolev_norm(&w(&d1, k + 1), theta - 1.0, 0.0);
    let c0_second = ratio_or_zero((lhs_second - lead_second).max(0.0), kplus * base_second);
    Ok(WeightCheck { lhs_first, base_first, c0_first, lhs_second, lead_second, base_second, c0_second })
}

/// Sup of both fitted weight constants over `trials` corpus fields and every (α, m) with α + 2m ≤ max_order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSweep {
    pub trials: usize,
    pub max_order: usize,
    pub seed: u64,
    pub sup_c0_first: f64,
    pub sup_c0_second: f64,
}

pub fn weight_commutator_sweep(corpus: &Corpus, theta: f64, max_order: usize, trials: usize, seed: u64, exec: Exec) -> Result<WeightSweep> {
    let pairs: Vec<(usize, usize)> = (0..=max_order).flat_map(|k| (0..=k / 2).map(move |m| (k - 2 * m, m))).collect();
    let per_trial = map_indexed(exec, trials, |i| -> Result<(f64, f64)> {
        let u = corpus.sample(&mut trial_rng(seed, i as u64));
        let mut best = (0.0f64, 0.0f64);
        for &(alpha, m) in &pairs {
            let c = weight_commutator_check(&u, alpha, m, theta)?;
            best = (best.0.max(c.c0_first), best.1.max(c.c0_second));
        }
        Ok(best)
    });
    let mut sweep = WeightSweep { trials, max_order, seed, sup_c0_first: 0.0, sup_c0_second: 0.0 };
    for r in per_trial {
        let (a, b) = r?;
        sweep.sup_c0_first = sweep.sup_c0_first.max(a);
        sweep.sup_c0_second = sweep.sup_c0_second.max(b);
    }
    Ok(sweep)
}

fn ratio_or_zero(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(g: Grid1D) -> Field {
        Field::from_real_fn(g, |x| (-0.5 * x * x).exp())
    }

    fn spec(times: Vec<f64>, m_max: usize, alpha_max: usize, theta: f64) -> TableSpec {
        TableSpec { theta, s: 1.0, sigma: 1.0, times, m_max, alpha_max, mode: Mode::Lenient, exec: Exec::Parallel }
    }

    #[test]
    fn hermite_low_orders() {
        let g = Grid1D::new(64, 10.0).unwrap();
        let t = 0.7;
        let h0 = hermite_factor(0, t, g).unwrap();
        assert!(h0.samples().iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
        let a = Complex64::new(0.0, 1.0 / (4.0 * t));
        let h1 = hermite_factor(1, t, g).unwrap();
        let h2 = hermite_factor(2, t, g).unwrap();
        for (j, (p, q)) in h1.samples().iter().zip(h2.samples()).enumerate() {
            let x = g.x(j);
            // symbolic: d/dx e^{ax²} = 2ax e^{ax²}; d²/dx² = (4a²x² + 2a) e^{ax²}
            assert!((p - 2.0 * a * x).norm() <= 1e-12 * (1.0 + p.norm()));
            assert!((q - (4.0 * a * a * x * x + 2.0 * a)).norm() <= 1e-12 * (1.0 + q.norm()));
        }
        assert!(hermite_factor(1, 0.0, g).is_err());
        let neg = hermite_factor(1, -t, g).unwrap();
        assert!(neg.relative_error(&h1.conj()) < 1e-15);
    }

    #[test]
    fn hermite_conversion_matches_spectral() {
        let g = Grid1D::new(1024, 60.0).unwrap();
        let sol = FreeSolution::new(gaussian(g));
        for t in [0.3, 1.0, -0.5] {
            let js = apply_j_free_all(&sol, t, 6, Exec::Sequential);
            let u = sol.at(t);
            assert!(weighted_derivative_via_j(&js, 0, t).unwrap().relative_error(&u) < 1e-15);
            for k in 1..=4 {
                let direct = weight_apply(&derivative(&u, k), -(k as f64));
                let via = weighted_derivative_via_j(&js, k, t).unwrap();
                let e = via.relative_error(&direct); assert!(e < 1e-8, "t={t} k={k} e={e}");
            }
        }
        assert!(weighted_derivative_via_j(&apply_j_free_all(&sol, 1.0, 2, Exec::Sequential), 3, 1.0).is_err());
    }

    #[test]
    fn free_table_basics() {
        let g = Grid1D::new(1024, 60.0).unwrap();
        let u0 = gaussian(g);
        let table = norm_table_free(&u0, 0.1, &spec(vec![0.5, 1.0, 2.0], 1, 4, 2.0)).unwrap();
        assert_eq!(table.rows.len(), 3 * 2 * 5);
        let base: Vec<f64> = [0.5, 1.0, 2.0].iter().map(|&t| table.row(0, 0, t).unwrap().value).collect();
        for b in &base {
            assert!((b - base[0]).abs() < 1e-9 * base[0]);
        }
        let t0 = norm_table_free(&u0, 0.1, &spec(vec![1.0], 0, 2, 0.0)).unwrap();
        let v = t0.row(0, 2, 1.0).unwrap().value;
        let js = apply_j_free_all(&FreeSolution::new(u0.clone()), 1.0, 2, Exec::Sequential);
        let via = sobolev_norm(&weighted_derivative_via_j(&js, 2, 1.0).unwrap(), 0.0, 0.0);
        assert!((v - via).abs() < 1e-6 * v);
    }

    #[test]
    fn free_table_crosses_over() {
        let g = Grid1D::new(4096, 100.0).unwrap();
        let u0 = Field::from_real_fn(g, |x| (-(1.0 + x * x).sqrt()).exp());
        let table = norm_table_free(&u0, 0.5, &spec(vec![1.0], 2, 8, 2.0)).unwrap();
        assert!(table.missing.is_empty());
        assert!(table.rows.iter().any(|r| r.path == Path::Hermite));
        assert!(table.rows.iter().any(|r| r.path == Path::Spectral));
        assert!(table.warnings.iter().any(|w| matches!(w, Warning::Crossover { .. })));
    }

    #[test]
    fn strict_mode_drops_unsafe_hermite_rows() {
        let g = Grid1D::new(2048, 60.0).unwrap();
        let u0 = Field::from_real_fn(g, |x| (1.0 + x * x).powf(-1.5));
        let mut sp = spec(vec![1.0], 0, 6, 2.0);
        sp.mode = Mode::Strict;
        assert!(norm_table_free(&u0, 1.0, &sp).is_err());
    }

    #[test]
    fn fit_synthetic_fixed_point() {
        // value = 2·3^α·α!·t^{-α} with a (0,0) amplitude of 2
        let mut table = NormTable { theta: 0.0, s: 1.0, sigma: 1.0, rows: vec![], missing: vec![], warnings: vec![] };
        for &t in &[0.5f64, 1.0] {
            for alpha in 0..=10usize {
                let v = 2.0 * 3f64.powi(alpha as i32) * (1..=alpha).product::<usize>() as f64 * t.powi(-(alpha as i32));
                table.push(0, alpha, t, v, Path::Spectral, None);
            }
        }
        let fit = gevrey_fit(&table, 1.0, 1.0, FitWindow { alpha_min: 1, alpha_max: 10 }).unwrap();
        assert!((fit.rho - 3.0).abs() < 1e-12);
        assert!((fit.m_const - 2.0).abs() < 1e-11);
        assert!((fit.spread - 1.0).abs() < 1e-12);
        assert!(gevrey_fit(&table, 1.0, 1.0, FitWindow { alpha_min: 20, alpha_max: 30 }).is_err());
        table.attach_fit(&fit);
        assert!(table.rows.iter().all(|r| (r.ratio.unwrap() - 2.0).abs() < 1e-10));
    }

    #[test]
    fn fit_max_semantics() {
        let mut table = NormTable { theta: 0.0, s: 1.0, sigma: 1.0, rows: vec![], missing: vec![], warnings: vec![] };
        table.push(0, 0, 1.0, 1.0, Path::Spectral, None);
        for alpha in 1..=6usize {
            let r = 5.0 - 0.5 * alpha as f64;
            let v = r.powi(alpha as i32) * (1..=alpha).product::<usize>() as f64;
            table.push(0, alpha, 1.0, v, Path::Spectral, None);
        }
        let fit = gevrey_fit(&table, 1.0, 1.0, FitWindow { alpha_min: 2, alpha_max: 6 }).unwrap();
        assert!((fit.rho - 4.0).abs() < 1e-12);
        assert_eq!(fit.radicals.iter().find(|e| (e.radical - fit.rho).abs() < 1e-12).unwrap().alpha, 2);
    }

    #[test]
    fn fit_radicals_scale_invariant() {
        let g = Grid1D::new(1024, 60.0).unwrap();
        let u0 = gaussian(g);
        let sp = spec(vec![1.0], 1, 6, 2.0);
        let w = FitWindow { alpha_min: 1, alpha_max: 6 };
        let a = gevrey_fit(&norm_table_free(&u0, 0.1, &sp).unwrap(), 0.5, 0.5, w).unwrap();
        let b = gevrey_fit(&norm_table_free(&u0.scale(Complex64::new(7.5, 0.0)), 0.1, &sp).unwrap(), 0.5, 0.5, w).unwrap();
        for (x, y) in a.radicals.iter().zip(&b.radicals) {
            assert!((x.radical.ln() - y.radical.ln()).abs() < 1e-12);
        }
        assert!((b.m_const / a.m_const - 7.5).abs() < 1e-9);
    }

    #[test]
    fn gauge_table_zero_coupling_matches_free() {
        let g = Grid1D::new(2048, 100.0).unwrap();
        let u0 = Field::from_real_fn(g, |x| 1.0 / x.cosh());
        let run = GaugeRun::new(u0.clone(), 0.0, vec![0.5, 1.0], Mode::Lenient).unwrap();
        let sp = spec(vec![0.5, 1.0], 1, 6, 2.0);
        let gt = norm_table_gauge(&run, &sp).unwrap();
        let ft = norm_table_free(&u0, 0.5, &sp).unwrap();
        for row in &gt.rows {
            let other = ft.row(row.m, row.alpha, row.t).unwrap();
            assert!((row.value - other.value).abs() <= 1e-9 * other.value, "{row:?} vs {other:?}");
        }
    }

    #[test]
    fn gauge_table_low_orders_match_spectral() {
        let g = Grid1D::new(2048, 100.0).unwrap();
        let u0 = Field::from_real_fn(g, |x| 1.0 / x.cosh());
        let a = 1.0;
        let t = 0.5;
        let run = GaugeRun::new(u0, a, vec![t], Mode::Lenient).unwrap();
        let gt = norm_table_gauge(&run, &spec(vec![t], 1, 3, 0.0)).unwrap();
        let u = run.solution(t);
        let ut = crate::gauge::time_derivative_special(&run.u0, a, t);
        for alpha in 0..=3 {
            let d = weight_apply(&derivative(&u, alpha), -(alpha as f64)).norm();
            let dt = weight_apply(&derivative(&ut, alpha), -((alpha + 2) as f64)).norm();
            assert!((gt.row(0, alpha, t).unwrap().value - d).abs() < 1e-8 * d);
            assert!((gt.row(1, alpha, t).unwrap().value - dt).abs() < 1e-8 * dt);
        }
        let mass: Vec<f64> = [0.3, 0.9]
            .iter()
            .map(|&t| norm_table_gauge(&run, &spec(vec![t], 0, 0, 0.0)).unwrap().rows[0].value)
            .collect();
        assert!((mass[0] - mass[1]).abs() < 1e-9 * mass[0]);
    }

    #[test]
    fn decay_fit_cases() {
        let g = Grid1D::new(4096, 100.0).unwrap();
        let u0 = Field::from_real_fn(g, |x| (-(1.0 + x * x).sqrt()).exp());
        let fit = decay_fit(&u0, 0.5, 1.0, 2.0, 8, Mode::Lenient).unwrap();
        assert!(fit.q_alpha[0] <= 1.0);
        let scaled = decay_fit(&u0.scale(Complex64::new(0.01, 0.0)), 0.5, 1.0, 2.0, 8, Mode::Lenient).unwrap();
        for (a, b) in fit.log_q.iter().zip(&scaled.log_q) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(decay_fit(&u0, 1.0, 1.0, 2.0, 4, Mode::Strict).is_err());
    }

    #[test]
    fn exponential_class_flags() {
        let g = Grid1D::new(4096, 200.0).unwrap();
        let poly = Field::from_real_fn(g, |x| (1.0 + x * x).powf(-1.5));
        assert!(!in_exponential_class(&poly, 0.1, 1.0));
        let gauss = gaussian(g);
        assert!(in_exponential_class(&gauss, 0.25, 0.5));
        let expb = Field::from_real_fn(g, |x| (-(1.0 + x * x).sqrt()).exp());
        assert!(in_exponential_class(&expb, 0.5, 1.0));
        assert!(!in_exponential_class(&expb, 1.0, 1.0));
    }

    #[test]
    fn weight_commutator_cases() {
        let g = Grid1D::new(256, 80.0).unwrap();
        let u = FreeSolution::new(Field::from_real_fn(g, |x| (-x * x / 8.0).exp())).at(0.5);
        let c = weight_commutator_check(&u, 0, 0, 2.0).unwrap();
        assert!(c.c0_first <= 1.0 + 1e-12);
        let c = weight_commutator_check(&u, 2, 1, 2.0).unwrap();
        assert!(c.c0_first.is_finite() && c.c0_second.is_finite());
        let sweep = weight_commutator_sweep(&Corpus::standard(), 2.0, 8, 10, 5, Exec::Parallel).unwrap();
        assert!(c.c0_first <= sweep.sup_c0_first.max(c.c0_first) && sweep.sup_c0_first > 0.0);
    }
}
