//! Browser demo: simulate a data set, then compare smoothers, plot
//! state/parameter correlation, or watch the parameter posterior being learned.
//!
//! Each exported function returns a JSON string that `www/index.html` plots.
//! The `*_json` functions hold the logic and are plain Rust, so they are
//! tested natively.

use serde::Serialize;
use smcsmooth::filters::{storvik_filter, FilterHistory, FilterOptions};
use smcsmooth::model::{simulate, Ar1, Chaotic, Dataset, Growth, ParamVector, StateSpaceModel, StochasticVolatility};
use smcsmooth::smoothers::{fit_joint_gaussian, pls_smooth, plsa_smooth, refilter_smooth, RefilterOptions, SmoothingDraws};
use smcsmooth::{stats, Seed};
use wasm_bindgen::prelude::*;

const MAX_T: usize = 500;
const MAX_N: usize = 20_000;

#[derive(Serialize)]
struct Data {
    truth: Vec<f64>,
    y: Vec<f64>,
}

#[derive(Serialize)]
struct Band {
    name: String,
    mean: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Serialize)]
struct ParamBand {
    name: &'static str,
    truth: f64,
    mean: f64,
    lo: f64,
    hi: f64,
}

#[derive(Serialize)]
struct Comparison {
    data: Data,
    methods: Vec<Band>,
    params: Vec<(String, Vec<ParamBand>)>,
}

#[derive(Serialize)]
struct Curves {
    params: Vec<&'static str>,
    corr: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct Learning {
    data: Data,
    params: Vec<Band>,
    truth: Vec<f64>,
}

macro_rules! dispatch {
    ($model:expr, $m:ident => $body:expr) => {
        match $model {
            "ar1" => {
                let $m = Ar1::default();
                $body
            }
            "growth" => {
                let $m = Growth::default();
                $body
            }
            "chaotic" => {
                let $m = Chaotic::default();
                $body
            }
            "sv" => {
                let $m = StochasticVolatility::default();
                $body
            }
            other => Err(format!("unknown model {other:?}")),
        }
    };
}

fn check(t_len: usize, n: usize) -> Result<(), String> {
    if !(2..=MAX_T).contains(&t_len) {
        return Err(format!("T must be in 2..={MAX_T}"));
    }
    if !(10..=MAX_N).contains(&n) {
        return Err(format!("N must be in 10..={MAX_N}"));
    }
    Ok(())
}

fn dataset<M: StateSpaceModel>(m: &M, t_len: usize, seed: Seed) -> Result<Dataset, String> {
    let x0 = m.initial_state().sample(&mut seed.stream(1, 0, 0));
    simulate(m, &m.generating_params(), t_len, x0, seed.derive(1, 1)).map_err(|e| e.to_string())
}

fn filter<M: StateSpaceModel>(m: &M, d: &Dataset, n: usize, seed: Seed) -> Result<FilterHistory<M::Params, M::Stats>, String> {
    storvik_filter(m, &d.observations, n, &FilterOptions::default(), seed.derive(2, 0)).map_err(|e| e.to_string())
}

fn data(d: &Dataset) -> Data {
    Data { truth: d.states.clone(), y: d.observations.clone() }
}

fn band<P: ParamVector>(name: &str, draws: &SmoothingDraws<P>) -> Band {
    let s = draws.state_summary();
    Band {
        name: name.to_string(),
        mean: s.iter().map(|s| s.mean).collect(),
        lo: s.iter().map(|s| s.q025).collect(),
        hi: s.iter().map(|s| s.q975).collect(),
    }
}

fn param_bands<P: ParamVector>(draws: &SmoothingDraws<P>, truth: &P) -> Vec<ParamBand> {
    draws
        .param_summary()
        .into_iter()
        .enumerate()
        .map(|(k, (name, s))| ParamBand { name, truth: truth.get(k), mean: s.mean, lo: s.q025, hi: s.q975 })
        .collect()
}

/// Runs PLS, adjusted PLS and refiltering on one simulated data set.
pub fn compare_json(model: &str, t_len: usize, n: usize, seed: u64) -> Result<String, String> {
    check(t_len, n)?;
    let seed = Seed(seed);
    dispatch!(model, m => {
        let d = dataset(&m, t_len, seed)?;
        let truth = m.generating_params();
        let h = filter(&m, &d, n, seed)?;
        let err = |e: smcsmooth::Error| e.to_string();
        let pls = pls_smooth(&m, &h, n, seed.derive(3, 0)).map_err(err)?;
        let mut runs = vec![("pls", pls)];
        if let Ok(fit) = fit_joint_gaussian(&h) {
            runs.push(("plsa", plsa_smooth(&m, &h, &fit, n, seed.derive(3, 1)).map_err(err)?));
        }
        let opts = RefilterOptions { param_draws: (n / 10).max(1), state_particles: n.min(150), ..RefilterOptions::quadratic(n) };
        runs.push(("refilter", refilter_smooth(&m, &d.observations, &opts, seed.derive(3, 2)).map_err(err)?));
        let out = Comparison {
            data: data(&d),
            methods: runs.iter().map(|(name, r)| band(name, r)).collect(),
            params: runs.iter().map(|(name, r)| (name.to_string(), param_bands(r, &truth))).collect(),
        };
        serde_json::to_string(&out).map_err(|e| e.to_string())
    })
}

/// Correlation between the filtered state and each transformed parameter over time.
pub fn correlation_json(model: &str, t_len: usize, n: usize, seed: u64) -> Result<String, String> {
    check(t_len, n)?;
    let seed = Seed(seed);
    dispatch!(model, m => {
        let d = dataset(&m, t_len, seed)?;
        let h = filter(&m, &d, n, seed)?;
        let fit = fit_joint_gaussian(&h).map_err(|e| e.to_string())?;
        let names = names_of(&m);
        let corr = (0..names.len())
            .map(|c| (0..fit.len()).map(|k| finite_or_zero(fit.correlation(k, c))).collect())
            .collect();
        serde_json::to_string(&Curves { params: names.to_vec(), corr }).map_err(|e| e.to_string())
    })
}

/// Filtered posterior mean and 95% band of each parameter at every time.
pub fn learning_json(model: &str, t_len: usize, n: usize, seed: u64) -> Result<String, String> {
    check(t_len, n)?;
    let seed = Seed(seed);
    dispatch!(model, m => {
        let d = dataset(&m, t_len, seed)?;
        let h = filter(&m, &d, n, seed)?;
        let truth = m.generating_params();
        let names = names_of(&m);
        let params = names
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let mut b = Band { name: name.to_string(), mean: vec![], lo: vec![], hi: vec![] };
                for cloud in &h.clouds {
                    let w = cloud.weights();
                    let v: Vec<f64> = cloud.params.iter().map(|p| p.get(k)).collect();
                    let (mean, _) = stats::weighted_mean_var(&v, &w);
                    b.mean.push(mean);
                    b.lo.push(stats::weighted_quantile(&v, &w, 0.025));
                    b.hi.push(stats::weighted_quantile(&v, &w, 0.975));
                }
                b
            })
            .collect();
        let truth = (0..names.len()).map(|k| truth.get(k)).collect();
        serde_json::to_string(&Learning { data: data(&d), params, truth }).map_err(|e| e.to_string())
    })
}

fn names_of<M: StateSpaceModel>(_: &M) -> &'static [&'static str] {
    M::Params::names()
}

fn finite_or_zero(v: f64) -> f64 {
    if v.is_finite() { v } else { 0.0 }
}

#[wasm_bindgen]
pub fn compare_smoothers(model: &str, t_len: usize, n: usize, seed: u32) -> Result<String, String> {
    compare_json(model, t_len, n, seed as u64)
}

#[wasm_bindgen]
pub fn correlation_curves(model: &str, t_len: usize, n: usize, seed: u32) -> Result<String, String> {
    correlation_json(model, t_len, n, seed as u64)
}

#[wasm_bindgen]
pub fn parameter_learning(model: &str, t_len: usize, n: usize, seed: u32) -> Result<String, String> {
    learning_json(model, t_len, n, seed as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: Result<String, String>) -> Value {
        serde_json::from_str(&s.unwrap()).unwrap()
    }

    #[test]
    fn compare_returns_three_methods_for_ar1() {
        let v = parse(compare_json("ar1", 20, 200, 4));
        let methods = v["methods"].as_array().unwrap();
        assert_eq!(methods.len(), 3);
        for m in methods {
            assert_eq!(m["mean"].as_array().unwrap().len(), 20);
            let lo = m["lo"][5].as_f64().unwrap();
            let hi = m["hi"][5].as_f64().unwrap();
            assert!(lo <= m["mean"][5].as_f64().unwrap() && m["mean"][5].as_f64().unwrap() <= hi);
        }
        assert_eq!(v["data"]["y"].as_array().unwrap().len(), 20);
    }

    #[test]
    fn every_model_runs() {
        for model in ["ar1", "growth", "chaotic", "sv"] {
            parse(compare_json(model, 15, 100, 1));
            parse(correlation_json(model, 15, 100, 1));
            parse(learning_json(model, 15, 100, 1));
        }
    }

    #[test]
    fn correlations_are_bounded() {
        let v = parse(correlation_json("ar1", 30, 300, 2));
        assert_eq!(v["params"].as_array().unwrap().len(), 3);
        for curve in v["corr"].as_array().unwrap() {
            assert_eq!(curve.as_array().unwrap().len(), 30);
            assert!(curve.as_array().unwrap().iter().all(|c| c.as_f64().unwrap().abs() <= 1.0 + 1e-9));
        }
    }

    #[test]
    fn learning_bands_contain_means() {
        let v = parse(learning_json("ar1", 25, 300, 3));
        for p in v["params"].as_array().unwrap() {
            for t in 0..25 {
                let (lo, m, hi) = (p["lo"][t].as_f64().unwrap(), p["mean"][t].as_f64().unwrap(), p["hi"][t].as_f64().unwrap());
                assert!(lo <= m + 1e-12 && m <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(compare_json("nope", 20, 200, 1).is_err());
        assert!(compare_json("ar1", 1, 200, 1).is_err());
        assert!(learning_json("ar1", 20, MAX_N + 1, 1).is_err());
    }

    #[test]
    fn same_seed_same_output() {
        assert_eq!(correlation_json("growth", 20, 200, 9), correlation_json("growth", 20, 200, 9));
    }
}
