use std::collections::HashMap;

use smcsmooth_harness::experiment::write_artifacts;
use smcsmooth_harness::{run_experiment, Algorithm, ExperimentConfig};

fn config(workers: usize) -> ExperimentConfig {
    ExperimentConfig::parse(&format!(
        "T = 30\nreplications = 6\nseed = 11\nn = 400\nalgorithms = pls, plsa, refilter\nrefilter.m0 = 40\n\
         refilter.n0 = 100\nreference.iterations = 2000\ncoverage.draws = 500\nworkers = {workers}\ntiming = off\n"
    ))
    .unwrap()
}

#[test]
fn aggregates_do_not_depend_on_worker_count() {
    let serial = run_experiment(&config(1)).unwrap().without_timings();
    let parallel = run_experiment(&config(3)).unwrap().without_timings();
    assert_eq!(serial, parallel);
}

#[test]
fn same_config_same_report() {
    let a = run_experiment(&config(2)).unwrap().without_timings();
    let b = run_experiment(&config(2)).unwrap().without_timings();
    assert_eq!(a, b);
}

fn read(path: &std::path::Path) -> Vec<HashMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| headers.iter().zip(rec.unwrap().iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect())
        .collect()
}

fn f(row: &HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap()
}

#[test]
fn artifacts_reread_exactly() {
    let cfg = config(2);
    let report = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = write_artifacts(&cfg, &report, dir.path()).unwrap();
    assert!(files.iter().all(|p| p.exists()));

    for row in read(&dir.path().join("metrics.csv")) {
        let rep: usize = row["rep"].parse().unwrap();
        let alg: Algorithm = row["algorithm"].parse().unwrap();
        let m = report.replications[rep].metrics(alg).unwrap();
        assert_eq!(f(&row, "mae_star"), m.mae_star);
        assert_eq!(f(&row, "maep_star"), m.maep_star);
        assert_eq!(f(&row, "seconds"), m.seconds);
    }
    let errors = read(&dir.path().join("errors.csv"));
    assert_eq!(errors.len(), 6 * 3 * 30);
    for row in &errors {
        let rep: usize = row["rep"].parse().unwrap();
        let t: usize = row["t"].parse().unwrap();
        let m = report.replications[rep].metrics(row["algorithm"].parse().unwrap()).unwrap();
        assert_eq!(f(row, "standardized_error"), m.errors[t - 1]);
    }
    for row in read(&dir.path().join("curves.csv")) {
        let a = report.algorithm(row["algorithm"].parse().unwrap()).unwrap();
        let t: usize = row["t"].parse().unwrap();
        assert_eq!(f(&row, "mean"), a.curve_mean[t - 1]);
        assert_eq!(f(&row, "p95"), a.curve_p95[t - 1]);
    }
    for row in read(&dir.path().join("correlation.csv")) {
        let rep: usize = row["rep"].parse().unwrap();
        let c = report.replications[rep].correlation.as_ref().unwrap();
        let p = c.index_of(&row["param"]).unwrap();
        let t: usize = row["t"].parse().unwrap();
        assert_eq!(f(&row, "corr"), c.values[p][t - 1]);
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"].as_array().unwrap().len(), 6);
    assert_eq!(manifest["config"]["n"], 400);
}
