//! Dispatches a configuration to its pipeline and evaluates the run's assertions.

use std::time::Instant;

use crate::config::{ExperimentKind, RunConfig};
use crate::diagnostics::{
    decay_fit, gevrey_fit, norm_table_free, norm_table_gauge, weight_commutator_sweep, FitWindow, GevreyFit, NormTable, TableSpec,
};
use crate::error::Result;
use crate::gauge::GaugeRun;
use crate::grid::Field;
use crate::lemmas::{factorial_sweep, summation1_sweep, summation2_sweep};
use crate::record::{Assertion, FactorialSummary, RunRecord, Timings};
use crate::witness::{kato_ponce_ratio, kato_ponce_sweep, leibniz_growth, leibniz_sweep, stable_within, Corpus};

pub struct RunOutput {
    pub record: RunRecord,
    pub timings: Timings,
}

struct Clock {
    start: Instant,
    stages: Vec<(String, f64)>,
}

impl Clock {
    fn new() -> Self {
        Clock { start: Instant::now(), stages: vec![] }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.stages.push((stage.into(), (now - self.start).as_secs_f64()));
        self.start = now;
    }
}

/// Runs the experiment. Module errors are captured in the record and fail it;
/// only an invalid configuration is returned as `Err`.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let mut record = RunRecord::empty(config.clone());
    let mut clock = Clock::new();
    let outcome = match config.kind {
        ExperimentKind::Free | ExperimentKind::Gauge => run_table(config, &mut record, &mut clock),
        ExperimentKind::Lemmas => run_lemmas(config, &mut record, &mut clock),
        ExperimentKind::Inequalities => run_inequalities(config, &mut record, &mut clock),
        ExperimentKind::DecayFit => run_decay(config, &mut record, &mut clock),
    };
    if let Err(e) = outcome {
        record.errors.push(format!("{} run: {e}", config.kind.as_str()));
    }
    Ok(RunOutput { record, timings: Timings { stages: clock.stages } })
}

/// σ of the asserted fit: configured, or s for free runs and max(1, s) for gauge runs.
fn primary_sigma(config: &RunConfig) -> f64 {
    match (config.physics.sigma, config.kind) {
        (Some(sigma), _) => sigma,
        (None, ExperimentKind::Gauge) => config.physics.s.max(1.0),
        (None, _) => config.physics.s,
    }
}

/// Fits with the primary σ first, then the other of {s, max(1, s)} when it differs.
pub fn fits_for(table: &NormTable, s: f64, primary: f64, window: FitWindow) -> Result<Vec<GevreyFit>> {
    let mut sigmas = vec![primary];
    for extra in [s, s.max(1.0)] {
        if !sigmas.contains(&extra) {
            sigmas.push(extra);
        }
    }
    sigmas.into_iter().map(|sigma| gevrey_fit(table, s, sigma, window)).collect()
}

fn run_table(config: &RunConfig, record: &mut RunRecord, clock: &mut Clock) -> Result<()> {
    let grid = config.grid()?;
    let u0: Field = config.profile.sample(grid);
    let ph = &config.physics;
    let sc = &config.schedule;
    let spec = TableSpec {
        theta: ph.theta,
        s: ph.s,
        sigma: primary_sigma(config),
        times: sc.times.clone(),
        m_max: sc.m_max,
        alpha_max: sc.alpha_max,
        mode: config.mode(),
        exec: config.exec,
    };
    let mut table = if config.kind == ExperimentKind::Free {
        norm_table_free(&u0, ph.epsilon, &spec)?
    } else {
        let run = GaugeRun::new(u0, ph.a, sc.times.clone(), config.mode())?;
        norm_table_gauge(&run, &spec)?
    };
    clock.lap("table");
    record.warnings = std::mem::take(&mut table.warnings);
    let present = table.present_fraction();
    record.assertions.push(Assertion::new(
        "rows-present",
        present >= config.tolerances.present_fraction,
        format!("{} of {} rows present ({:.3}), need {}", table.rows.len(), table.expected_rows(), present, config.tolerances.present_fraction),
    ));
    let fits = fits_for(&table, ph.s, spec.sigma, sc.fit_window())?;
    clock.lap("fit");
    table.attach_fit(&fits[0]);
    record.assertions.push(Assertion::new(
        "radical-spread",
        fits[0].spread <= config.tolerances.spread,
        format!("spread {:.4} (sigma {}), limit {}", fits[0].spread, fits[0].sigma, config.tolerances.spread),
    ));
    record.table = Some(table);
    record.fits = fits;
    Ok(())
}

fn run_lemmas(config: &RunConfig, record: &mut RunRecord, clock: &mut Clock) -> Result<()> {
    let lm = &config.lemmas;
    let (checked, violations) = factorial_sweep(lm.factorial_n, lm.factorial_order, lm.factorial_parts)?;
    record.factorial = Some(FactorialSummary { checked, violations });
    record.assertions.push(Assertion::new("factorial", violations == 0, format!("{violations} violations in {checked} decompositions")));
    clock.lap("factorial");
    let s1 = summation1_sweep(lm.n, lm.l, lm.p, lm.q, lm.trials, config.seed, config.exec)?;
    let s2 = summation2_sweep(lm.n, lm.l, lm.trials, config.seed, config.exec)?;
    clock.lap("summation");
    for s in [s1, s2] {
        record.assertions.push(Assertion::new(
            &s.name,
            s.violations == 0,
            format!("{} violations in {} trials, worst lhs/rhs {:.4}", s.violations, s.trials, s.worst_ratio),
        ));
        record.sweeps.push(s);
    }
    Ok(())
}

fn run_inequalities(config: &RunConfig, record: &mut RunRecord, clock: &mut Clock) -> Result<()> {
    let iq = &config.inequalities;
    let theta = config.physics.theta;
    let corpus = Corpus::standard();
    let stab = config.tolerances.stability;
    // two disjoint corpora: distinct seeds give independent ChaCha keys
    let seeds = [config.seed, config.seed.wrapping_add(1)];
    let kp: Vec<_> = seeds.iter().map(|&s| kato_ponce_sweep(&corpus, theta, iq.trials, s, config.exec)).collect::<Result<_>>()?;
    let constant = Field::from_fn(corpus.grid, |_| rustfft::num_complex::Complex64::new(1.5, 0.0));
    let zero = kato_ponce_ratio(&constant, &corpus.sample(&mut crate::lemmas::trial_rng(config.seed, 0)), theta)?;
    record.assertions.push(Assertion::new("kato-ponce-constant", zero == 0.0, format!("ratio {zero:e} for constant f")));
    push_stability(record, "kato-ponce", kp[0].sup_ratio, kp[1].sup_ratio, kp.iter().all(|r| r.all_finite()), stab);
    clock.lap("kato-ponce");
    let mut chain = Vec::new();
    let mut leib = Vec::new();
    for &s in &seeds {
        let (c, l) = leibniz_sweep(&corpus, 2, iq.multiplier, theta, iq.trials, s, config.exec)?;
        chain.push(c);
        leib.push(l);
    }
    push_stability(record, "chain", chain[0].sup_ratio, chain[1].sup_ratio, chain.iter().all(|r| r.all_finite()), stab);
    push_stability(record, "leibniz", leib[0].sup_ratio, leib[1].sup_ratio, leib.iter().all(|r| r.all_finite()), stab);
    let ks: Vec<usize> = (2..=iq.max_factors).collect();
    let growth = leibniz_growth(&corpus, &ks, iq.multiplier, theta, iq.trials, config.seed, config.exec)?;
    record.assertions.push(Assertion::new(
        "leibniz-growth",
        growth.chain_spread() <= stab && growth.leibniz_spread() <= stab,
        format!("k-th root spread chain {:.4}, leibniz {:.4}, limit {stab}", growth.chain_spread(), growth.leibniz_spread()),
    ));
    clock.lap("leibniz");
    let weights: Vec<_> = seeds
        .iter()
        .map(|&s| weight_commutator_sweep(&corpus, theta, iq.weight_order, iq.trials.min(50), s, config.exec))
        .collect::<Result<_>>()?;
    push_stability(record, "weight-first", weights[0].sup_c0_first, weights[1].sup_c0_first, true, stab);
    push_stability(record, "weight-second", weights[0].sup_c0_second, weights[1].sup_c0_second, true, stab);
    clock.lap("weight");
    record.witnesses = kp.into_iter().chain(chain).chain(leib).collect();
    record.growth = Some(growth);
    record.weight = weights;
    Ok(())
}

fn push_stability(record: &mut RunRecord, name: &str, a: f64, b: f64, finite: bool, factor: f64) {
    record.assertions.push(Assertion::new(
        name,
        finite && stable_within(a, b, factor),
        format!("sup ratios {a:.6} vs {b:.6}, limit x{factor}"),
    ));
}

fn run_decay(config: &RunConfig, record: &mut RunRecord, clock: &mut Clock) -> Result<()> {
    let u0 = config.profile.sample(config.grid()?);
    let ph = &config.physics;
    let mut fit = decay_fit(&u0, ph.epsilon, ph.s, ph.theta, config.schedule.alpha_max, config.mode())?;
    clock.lap("decay");
    record.warnings = std::mem::take(&mut fit.warnings);
    record.assertions.push(Assertion::new(
        "decay-spread",
        fit.spread <= config.tolerances.spread,
        format!("q max/min {:.4}, limit {}", fit.spread, config.tolerances.spread),
    ));
    record.decay = Some(fit);
    Ok(())
}

/// Refits a stored table, as `fit gevrey --in <record>` does.
pub fn refit(record: &RunRecord, s: f64, sigma: f64, window: FitWindow) -> Result<GevreyFit> {
    let table = record
        .table
        .as_ref()
        .ok_or_else(|| crate::error::Error::InvalidArgument(format!("record '{}' has no norm table", record.config.id)))?;
    gevrey_fit(table, s, sigma, window)
}
