use std::collections::BTreeSet;
use std::path::Path;

use xferlab::{run_experiment, ExperimentConfig, ExperimentKind, RunOptions};

fn corr_cfg() -> ExperimentConfig {
    ExperimentConfig::parse("seeds = [0, 1]\n[data]\nbetas = [0.0, 0.5]\ntrain_per_class = 40\n[corr_check]\nn = 2000\n").unwrap()
}

fn opts(out: &Path, jobs: usize, resume: bool) -> RunOptions {
    RunOptions { out: out.to_path_buf(), jobs, resume }
}

#[test]
fn run_writes_tables_and_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&corr_cfg(), ExperimentKind::CorrCheck, &opts(dir.path(), 1, false)).unwrap();
    let summary = out.table("corr_check").unwrap();
    assert_eq!(summary.numeric_column("beta").unwrap(), vec![0.0, 0.5]);
    assert_eq!(summary.numeric_column("seed_count").unwrap(), vec![2.0, 2.0]);
    for f in ["corr_check.csv", "corr_check.json", "corr_check_cells.csv", "config.toml", "provenance.json", "streams.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let prov: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("provenance.json")).unwrap()).unwrap();
    assert_eq!(prov["master_seed"], 0);
    assert_eq!(prov["jobs"], 1);
    let saved = ExperimentConfig::load(&dir.path().join("config.toml")).unwrap();
    assert_eq!(saved.seeds, vec![0, 1]);
}

#[test]
fn stream_audit_lists_distinct_streams() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&corr_cfg(), ExperimentKind::CorrCheck, &opts(dir.path(), 1, false)).unwrap();
    let entries: Vec<serde_json::Value> = serde_json::from_slice(&std::fs::read(dir.path().join("streams.json")).unwrap()).unwrap();
    let paths: BTreeSet<&str> = entries.iter().map(|e| e["path"].as_str().unwrap()).collect();
    let ids: BTreeSet<u64> = entries.iter().map(|e| e["stream_id"].as_u64().unwrap()).collect();
    assert_eq!(paths.len(), entries.len());
    assert_eq!(ids.len(), entries.len());
    assert!(paths.contains("corr_check/beta=0.5/rep=1/pairs"));
}

#[test]
fn results_do_not_depend_on_jobs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&corr_cfg(), ExperimentKind::CorrCheck, &opts(a.path(), 1, false)).unwrap();
    run_experiment(&corr_cfg(), ExperimentKind::CorrCheck, &opts(b.path(), 3, false)).unwrap();
    for f in ["corr_check.csv", "corr_check_cells.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn resume_reuses_finished_cells() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = corr_cfg();
    run_experiment(&cfg, ExperimentKind::CorrCheck, &opts(dir.path(), 1, false)).unwrap();
    let cell = dir.path().join("cells/corr_check/beta=0.5_rep=1.json");
    let mut saved: serde_json::Value = serde_json::from_slice(&std::fs::read(&cell).unwrap()).unwrap();
    saved["result"]["mean_corr"] = serde_json::json!(0.125);
    std::fs::write(&cell, serde_json::to_vec(&saved).unwrap()).unwrap();

    let marker = |resume| {
        let out = run_experiment(&cfg, ExperimentKind::CorrCheck, &opts(dir.path(), 1, resume)).unwrap();
        out.table("corr_check_cells").unwrap().numeric_column("mean_corr").unwrap()[3]
    };
    assert_eq!(marker(true), 0.125);
    // A different config invalidates the stored cells.
    let mut other = cfg.clone();
    other.corr_check.n = 2001;
    let out = run_experiment(&other, ExperimentKind::CorrCheck, &opts(dir.path(), 1, true)).unwrap();
    assert_ne!(out.table("corr_check_cells").unwrap().numeric_column("mean_corr").unwrap()[3], 0.125);
    // Without --resume every cell reruns.
    assert_ne!(marker(false), 0.125);
}
