//! Persisted run output: a JSON record with a fixed field order and a CSV of norm rows.

use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::diagnostics::{DecayFit, GevreyFit, NormTable, WeightSweep};
use crate::error::{Error, Result};
use crate::lemmas::SweepSummary;
use crate::warning::Warning;
use crate::witness::{GrowthReport, WitnessReport};

pub const TOOL: &str = "gevlab";
pub const CSV_HEADER: [&str; 9] = ["experiment_id", "t", "m", "alpha", "theta", "value", "radical", "path", "warning"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Assertion { name: name.into(), passed, detail }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorialSummary {
    pub checked: u64,
    pub violations: u64,
}

/// Everything a run produced except wall-clock timings, which live in a sidecar
/// file so that identical runs serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub table: Option<NormTable>,
    /// the fit used for assertions comes first
    pub fits: Vec<GevreyFit>,
    pub decay: Option<DecayFit>,
    pub factorial: Option<FactorialSummary>,
    pub sweeps: Vec<SweepSummary>,
    pub witnesses: Vec<WitnessReport>,
    pub growth: Option<GrowthReport>,
    pub weight: Vec<WeightSweep>,
    pub warnings: Vec<Warning>,
    pub errors: Vec<String>,
    pub assertions: Vec<Assertion>,
}

impl RunRecord {
    pub fn empty(config: RunConfig) -> Self {
        RunRecord {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            table: None,
            fits: vec![],
            decay: None,
            factorial: None,
            sweeps: vec![],
            witnesses: vec![],
            growth: None,
            weight: vec![],
            warnings: vec![],
            errors: vec![],
            assertions: vec![],
        }
    }

    /// True when no errors were recorded and every assertion held.
    pub fn passed(&self) -> bool {
        self.errors.is_empty() && self.assertions.iter().all(|a| a.passed)
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self.errors.iter().map(|e| format!("error: {e}")).collect();
        out.extend(self.assertions.iter().filter(|a| !a.passed).map(|a| format!("{}: {}", a.name, a.detail)));
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &FsPath) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// One line per (m, α, t); rows that could not be computed keep empty value
    /// columns and carry their reason in the warning column.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        if let Some(table) = &self.table {
            let id = self.config.id.as_str();
            let theta = table.theta.to_string();
            for r in &table.rows {
                w.write_record([
                    id,
                    &r.t.to_string(),
                    &r.m.to_string(),
                    &r.alpha.to_string(),
                    &theta,
                    &r.value.to_string(),
                    &r.radical.map(|v| v.to_string()).unwrap_or_default(),
                    r.path.as_str(),
                    r.warning.as_deref().unwrap_or(""),
                ])
                .map_err(csv_err)?;
            }
            for r in &table.missing {
                w.write_record([id, &r.t.to_string(), &r.m.to_string(), &r.alpha.to_string(), &theta, "", "", "", &r.reason])
                    .map_err(csv_err)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    /// (stage, seconds)
    pub stages: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputPaths {
    pub record: PathBuf,
    pub csv: PathBuf,
    pub timings: PathBuf,
}

/// Writes `<id>.record.json`, `<id>.csv` and `<id>.timings.json` into `dir`.
pub fn write_outputs(record: &RunRecord, timings: &Timings, dir: &FsPath) -> Result<OutputPaths> {
    std::fs::create_dir_all(dir)?;
    let id = &record.config.id;
    let paths = OutputPaths {
        record: dir.join(format!("{id}.record.json")),
        csv: dir.join(format!("{id}.csv")),
        timings: dir.join(format!("{id}.timings.json")),
    };
    std::fs::write(&paths.record, record.to_json()?)?;
    std::fs::write(&paths.csv, record.to_csv()?)?;
    std::fs::write(&paths.timings, serde_json::to_string_pretty(timings)?)?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentKind;
    use crate::diagnostics::{MissingRow, NormRow, Path};

    fn sample() -> RunRecord {
        let mut r = RunRecord::empty(RunConfig::new("demo", ExperimentKind::Free));
        r.table = Some(NormTable {
            theta: 2.0,
            s: 1.0,
            sigma: 1.0,
            rows: vec![NormRow { m: 0, alpha: 1, t: 0.1, value: 1.0 / 3.0, radical: Some(0.1 + 0.2), ratio: None, path: Path::Hermite, warning: Some("a, b".into()) }],
            missing: vec![MissingRow { m: 1, alpha: 2, t: 0.1, reason: "unresolved".into() }],
            warnings: vec![],
        });
        r.assertions.push(Assertion::new("x", true, "ok".into()));
        r
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let r = sample();
        let text = r.to_json().unwrap();
        let back = RunRecord::from_json(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json().unwrap(), text);
        assert!(r.passed());
    }

    #[test]
    fn csv_layout() {
        let csv = sample().to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "experiment_id,t,m,alpha,theta,value,radical,path,warning");
        assert_eq!(lines[1], "demo,0.1,0,1,2,0.3333333333333333,0.30000000000000004,hermite,\"a, b\"");
        assert_eq!(lines[2], "demo,0.1,1,2,2,,,,unresolved");
    }
}
