//! Run configuration, read from TOML. Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::diagnostics::FitWindow;
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::par::Exec;
use crate::profile::Profile;
use crate::warning::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Free,
    Gauge,
    Lemmas,
    Inequalities,
    DecayFit,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Free => "free",
            ExperimentKind::Gauge => "gauge",
            ExperimentKind::Lemmas => "lemmas",
            ExperimentKind::Inequalities => "inequalities",
            ExperimentKind::DecayFit => "decay-fit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub points: usize,
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { points: 4096, length: 100.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Physics {
    /// coupling of the derivative-cubic term
    pub a: f64,
    pub theta: f64,
    pub s: f64,
    pub r: f64,
    pub epsilon: f64,
    /// spatial factorial exponent of the main fit; max(1, s) when absent
    pub sigma: Option<f64>,
}

impl Default for Physics {
    fn default() -> Self {
        Physics { a: 1.0, theta: 2.0, s: 1.0, r: 0.5, epsilon: 0.5, sigma: None }
    }
}

impl Physics {
    pub fn sigma(&self) -> f64 {
        self.sigma.unwrap_or(self.s.max(1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Schedule {
    pub times: Vec<f64>,
    pub m_max: usize,
    pub alpha_max: usize,
    /// highest J order for energy vectors
    pub l: usize,
    /// inclusive α range of the Gevrey fit
    pub window: [usize; 2],
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { times: vec![0.5, 1.0], m_max: 1, alpha_max: 8, l: 6, window: [1, 8] }
    }
}

impl Schedule {
    pub fn fit_window(&self) -> FitWindow {
        FitWindow { alpha_min: self.window[0], alpha_max: self.window[1] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LemmaSettings {
    pub n: usize,
    pub l: usize,
    pub p: usize,
    pub q: usize,
    pub trials: usize,
    /// exhaustive factorial sweep bounds
    pub factorial_n: usize,
    pub factorial_order: usize,
    pub factorial_parts: usize,
}

impl Default for LemmaSettings {
    fn default() -> Self {
        LemmaSettings { n: 2, l: 4, p: 2, q: 2, trials: 200, factorial_n: 3, factorial_order: 6, factorial_parts: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InequalitySettings {
    pub trials: usize,
    /// multiplier order m of ⟨D⟩^m
    pub multiplier: f64,
    pub max_factors: usize,
    /// largest α + 2m in the weight-constant sweep
    pub weight_order: usize,
}

impl Default for InequalitySettings {
    fn default() -> Self {
        InequalitySettings { trials: 100, multiplier: 2.0, max_factors: 4, weight_order: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// max/min allowed for fitted radicals and decay ratios
    pub spread: f64,
    pub present_fraction: f64,
    /// allowed ratio between sup-constants of independent corpora
    pub stability: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { spread: 3.0, present_fraction: 0.9, stability: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub id: String,
    pub kind: ExperimentKind,
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub exec: Exec,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_profile")]
    pub profile: Profile,
    #[serde(default)]
    pub physics: Physics,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub lemmas: LemmaSettings,
    #[serde(default)]
    pub inequalities: InequalitySettings,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_seed() -> u64 {
    11
}

fn default_profile() -> Profile {
    Profile::Gaussian { width: 1.0 }
}

impl RunConfig {
    pub fn new(id: &str, kind: ExperimentKind) -> Self {
        RunConfig {
            id: id.into(),
            kind,
            strict: false,
            exec: Exec::default(),
            seed: default_seed(),
            grid: GridConfig::default(),
            profile: default_profile(),
            physics: Physics::default(),
            schedule: Schedule::default(),
            lemmas: LemmaSettings::default(),
            inequalities: InequalitySettings::default(),
            tolerances: Tolerances::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn mode(&self) -> Mode {
        if self.strict {
            Mode::Strict
        } else {
            Mode::Lenient
        }
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.grid.points, self.grid.length).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() || !self.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(Error::Config(format!("id must be non-empty [A-Za-z0-9_-], got '{}'", self.id)));
        }
        self.grid()?;
        self.profile.validate()?;
        let ph = &self.physics;
        if !(ph.s >= 0.5) || !(ph.r > 0.0 && ph.r <= 1.0) || !ph.theta.is_finite() || !ph.a.is_finite() || !(ph.epsilon > 0.0) {
            return Err(Error::Config(format!("physics out of range: {ph:?}")));
        }
        let sc = &self.schedule;
        if matches!(self.kind, ExperimentKind::Free | ExperimentKind::Gauge) {
            if sc.times.is_empty() || sc.times.iter().any(|t| *t == 0.0 || !t.is_finite()) {
                return Err(Error::Config("schedule.times must be non-empty, finite and nonzero".into()));
            }
            if sc.window[0] > sc.window[1] || sc.window[1] > sc.alpha_max {
                return Err(Error::Config(format!("fit window {:?} must lie inside 0..={}", sc.window, sc.alpha_max)));
            }
        }
        if self.kind == ExperimentKind::Inequalities && (self.inequalities.max_factors < 2 || self.inequalities.multiplier < 1.0) {
            return Err(Error::Config("inequalities need max_factors >= 2 and multiplier >= 1".into()));
        }
        if self.kind == ExperimentKind::Lemmas && (self.lemmas.n == 0 || self.lemmas.p == 0 || self.lemmas.q == 0) {
            return Err(Error::Config("lemma settings need n, p, q >= 1".into()));
        }
        Ok(())
    }
}
