use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gevlab::config::{ExperimentKind, RunConfig};
use gevlab::diagnostics::FitWindow;
use gevlab::par::Exec;
use gevlab::profile::Profile;
use gevlab::record::{write_outputs, RunRecord};
use gevlab::runner::{refit, run};

/// Gevrey smoothing experiments for free and gauge-transformed Schrödinger flows.
#[derive(Parser)]
#[command(name = "gevlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Randomized and exhaustive checks.
    Check {
        #[command(subcommand)]
        what: CheckKind,
    },
    /// Norm tables with Gevrey fits.
    Run {
        #[command(subcommand)]
        what: RunKind,
    },
    /// Fits on data or stored records.
    Fit {
        #[command(subcommand)]
        what: FitKind,
    },
}

#[derive(Subcommand)]
enum CheckKind {
    Lemmas(Common),
    Inequalities(Common),
}

#[derive(Subcommand)]
enum RunKind {
    Free(Common),
    Gauge(Common),
}

#[derive(Subcommand)]
enum FitKind {
    Decay(Common),
    /// Refit the norm table of a stored record.
    Gevrey {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        /// inclusive α range, e.g. 4,12
        #[arg(long, value_delimiter = ',')]
        window: Option<Vec<usize>>,
    },
}

#[derive(Args, Default)]
struct Common {
    /// TOML configuration; flags below override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// output directory (default: $GEVLAB_OUT or ./out)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    id: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    length: Option<f64>,
    /// gaussian | sech | exp-bracket | poly
    #[arg(long)]
    profile: Option<String>,
    #[arg(long, value_delimiter = ',')]
    profile_params: Option<Vec<f64>>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    #[arg(long)]
    m_max: Option<usize>,
    #[arg(long)]
    alpha_max: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    window: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
}

fn build_config(kind: ExperimentKind, c: &Common) -> gevlab::Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::new(kind.as_str(), kind),
    };
    cfg.kind = kind;
    macro_rules! set {
        ($field:expr, $value:expr) => {
            if let Some(v) = $value.clone() {
                $field = v;
            }
        };
    }
    set!(cfg.id, c.id);
    set!(cfg.seed, c.seed);
    cfg.strict |= c.strict;
    if c.sequential {
        cfg.exec = Exec::Sequential;
    }
    set!(cfg.grid.points, c.points);
    set!(cfg.grid.length, c.length);
    if let Some(kind) = &c.profile {
        cfg.profile = Profile::from_name(kind, c.profile_params.as_deref().unwrap_or(&[]))?;
    } else if c.profile_params.is_some() {
        return Err(gevlab::Error::Config("--profile-params needs --profile".into()));
    }
    set!(cfg.physics.a, c.a);
    set!(cfg.physics.theta, c.theta);
    set!(cfg.physics.s, c.s);
    set!(cfg.physics.r, c.r);
    set!(cfg.physics.epsilon, c.epsilon);
    if c.sigma.is_some() {
        cfg.physics.sigma = c.sigma;
    }
    set!(cfg.schedule.times, c.times);
    set!(cfg.schedule.m_max, c.m_max);
    set!(cfg.schedule.alpha_max, c.alpha_max);
    set!(cfg.schedule.l, c.l);
    if let Some(w) = &c.window {
        cfg.schedule.window = parse_window(w)?;
    }
    if let Some(t) = c.trials {
        cfg.lemmas.trials = t;
        cfg.inequalities.trials = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_window(w: &[usize]) -> gevlab::Result<[usize; 2]> {
    match w {
        [lo, hi] => Ok([*lo, *hi]),
        _ => Err(gevlab::Error::Config(format!("--window takes two values lo,hi, got {w:?}"))),
    }
}

fn out_dir(c: &Common) -> PathBuf {
    c.out.clone().or_else(|| std::env::var_os("GEVLAB_OUT").map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"))
}

fn execute(kind: ExperimentKind, c: &Common) -> gevlab::Result<bool> {
    let cfg = build_config(kind, c)?;
    let output = run(&cfg)?;
    let paths = write_outputs(&output.record, &output.timings, &out_dir(c))?;
    for a in &output.record.assertions {
        println!("{} {}: {}", if a.passed { "ok  " } else { "FAIL" }, a.name, a.detail);
    }
    for e in &output.record.errors {
        println!("ERR  {e}");
    }
    println!("record {}", paths.record.display());
    println!("csv    {}", paths.csv.display());
    let passed = output.record.passed();
    if !passed {
        eprintln!("violations:");
        for f in output.record.failures() {
            eprintln!("  {f}");
        }
    }
    Ok(passed)
}

fn fit_gevrey(input: &PathBuf, s: Option<f64>, sigma: Option<f64>, window: &Option<Vec<usize>>) -> gevlab::Result<bool> {
    let record = RunRecord::load(input)?;
    let table = record.table.as_ref();
    let s = s.or(table.map(|t| t.s)).unwrap_or(record.config.physics.s);
    let sigma = sigma.or(table.map(|t| t.sigma)).unwrap_or(s.max(1.0));
    let window = match window {
        Some(w) => {
            let [alpha_min, alpha_max] = parse_window(w)?;
            FitWindow { alpha_min, alpha_max }
        }
        None => record.config.schedule.fit_window(),
    };
    let fit = refit(&record, s, sigma, window)?;
    println!("{}", serde_json::to_string_pretty(&fit).map_err(gevlab::Error::from)?);
    Ok(fit.spread <= record.config.tolerances.spread)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check { what: CheckKind::Lemmas(c) } => execute(ExperimentKind::Lemmas, c),
        Command::Check { what: CheckKind::Inequalities(c) } => execute(ExperimentKind::Inequalities, c),
        Command::Run { what: RunKind::Free(c) } => execute(ExperimentKind::Free, c),
        Command::Run { what: RunKind::Gauge(c) } => execute(ExperimentKind::Gauge, c),
        Command::Fit { what: FitKind::Decay(c) } => execute(ExperimentKind::DecayFit, c),
        Command::Fit { what: FitKind::Gevrey { input, s, sigma, window } } => fit_gevrey(input, *s, *sigma, window),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
