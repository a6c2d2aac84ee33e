use std::path::PathBuf;

use gevlab::config::{ExperimentKind, RunConfig};
use gevlab::par::Exec;
use gevlab::record::RunRecord;
use gevlab::runner::run;

fn config_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> RunConfig {
    RunConfig::load(&config_dir().join(name)).unwrap()
}

#[test]
fn shipped_configs_parse() {
    let mut n = 0;
    for entry in std::fs::read_dir(config_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 6);
}

#[test]
fn lemma_config_has_no_violations() {
    let out = run(&load("lemmas.toml")).unwrap();
    assert!(out.record.passed(), "{:?}", out.record.failures());
    assert!(out.record.sweeps.iter().all(|s| s.violations == 0 && s.trials == 200));
}

#[test]
fn free_gaussian_table_is_complete_and_bounded() {
    let out = run(&load("free-gaussian.toml")).unwrap();
    let table = out.record.table.as_ref().unwrap();
    assert!(table.present_fraction() >= 0.9);
    assert!(out.record.fits[0].spread <= 3.0);
    // both sigma = s and sigma = max(1, s) are reported
    assert_eq!(out.record.fits.len(), 2);
    assert!(table.rows.iter().all(|r| r.ratio.is_some()));
}

#[test]
fn gauge_and_decay_configs_pass() {
    for name in ["gauge-sech.toml", "decay-fit.toml"] {
        let out = run(&load(name)).unwrap();
        assert!(out.record.passed(), "{name}: {:?}", out.record.failures());
    }
}

#[test]
fn record_roundtrip_and_mode_independence() {
    let mut cfg = load("free-exp-bracket.toml");
    let par = run(&cfg).unwrap().record;
    let text = par.to_json().unwrap();
    let back = RunRecord::from_json(&text).unwrap();
    assert_eq!(back, par);
    assert_eq!(back.to_json().unwrap(), text);
    cfg.exec = Exec::Sequential;
    let seq = run(&cfg).unwrap().record;
    assert_eq!(seq.table, par.table);
    assert_eq!(seq.to_csv().unwrap(), par.to_csv().unwrap());
}

#[test]
fn strict_mode_records_module_errors() {
    let mut cfg = RunConfig::new("strict-poly", ExperimentKind::Free);
    cfg.profile = gevlab::profile::Profile::Poly { k: 3.0 };
    cfg.strict = true;
    cfg.schedule.window = [1, 8];
    let out = run(&cfg).unwrap();
    assert!(!out.record.passed());
}
