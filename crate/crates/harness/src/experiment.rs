//! Replicated benchmark runs: simulate, filter, smooth, score against a
//! reference posterior, aggregate.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use smcsmooth::filters::{final_param_draws, sample_index, storvik_filter, FilterHistory, FilterOptions};
use smcsmooth::mcmc::{gibbs_ffbs, single_site_mh, ChainOptions, InitStrategy, McmcChain, SingleSiteOptions};
use smcsmooth::model::{simulate, Dataset, ParamVector, StateSpaceModel};
use smcsmooth::smoothers::{
    ffbs_with_params, fit_joint_gaussian, pls_smooth, plsa_smooth, refilter_with_params, SmoothingDraws, Summary,
};
use smcsmooth::stats;
use smcsmooth::Seed;

use crate::config::{Algorithm, AlgorithmSpec, Budget, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::metrics::{maep_star, standardized_errors, state_param_correlation, CorrelationCurves};
use crate::models::AnyModel;
use crate::with_model;

/// Seed domains for the pieces of one replication.
pub mod seeds {
    pub const REPLICATION: u64 = 101;
    pub const DATASET: u64 = 102;
    pub const FILTER: u64 = 103;
    pub const REFERENCE: u64 = 104;
    pub const ALGORITHM: u64 = 105;
    pub const COVERAGE: u64 = 106;
    pub const INIT: u64 = 107;
}

/// Smallest fraction of successful runs for which aggregates are reported.
pub const MIN_SUCCESS: f64 = 0.8;
/// Budget-matching tolerance on relative run time.
pub const MATCH_TOLERANCE: f64 = 0.15;
const CALIBRATION_ROUNDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub mae_star: f64,
    pub maep_star: f64,
    /// Standardized error per t.
    pub errors: Vec<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub algorithm: Algorithm,
    pub result: std::result::Result<RunMetrics, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamCoverage {
    pub name: &'static str,
    pub lo: f64,
    pub hi: f64,
    pub truth: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub rep: usize,
    pub seed: u64,
    /// Set when the dataset, filter or reference failed; no outcomes then.
    pub failure: Option<String>,
    pub outcomes: Vec<Outcome>,
    pub filter_seconds: f64,
    pub reference_seconds: f64,
    pub correlation: Option<CorrelationCurves>,
    /// 95% intervals of `p(theta | y^T)` from the Storvik filter.
    pub coverage: Vec<ParamCoverage>,
}

impl ReplicationRecord {
    pub fn metrics(&self, alg: Algorithm) -> Option<&RunMetrics> {
        self.outcomes.iter().find(|o| o.algorithm == alg).and_then(|o| o.result.as_ref().ok())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmReport {
    pub algorithm: Algorithm,
    pub spec: AlgorithmSpec,
    pub mae_star: f64,
    pub maep_star: f64,
    pub curve_mean: Vec<f64>,
    pub curve_p95: Vec<f64>,
    pub seconds: f64,
    pub successes: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub algorithm: Algorithm,
    pub target_seconds: f64,
    /// `(knob, seconds)` per trial.
    pub trials: Vec<(usize, f64)>,
    pub chosen: usize,
    /// The cap stopped the knob short of the target.
    pub capped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub model: String,
    pub t_len: usize,
    pub n: usize,
    pub reference: &'static str,
    pub reference_iterations: usize,
    pub algorithms: Vec<AlgorithmReport>,
    pub calibration: Vec<Calibration>,
    pub replications: Vec<ReplicationRecord>,
    pub seconds: f64,
}

impl MetricsReport {
    pub fn algorithm(&self, alg: Algorithm) -> Option<&AlgorithmReport> {
        self.algorithms.iter().find(|a| a.algorithm == alg)
    }

    /// `f` of two algorithms over the replications where both succeeded.
    pub fn paired(&self, a: Algorithm, b: Algorithm, f: impl Fn(&RunMetrics) -> f64) -> (Vec<f64>, Vec<f64>) {
        self.replications
            .iter()
            .filter_map(|r| Some((f(r.metrics(a)?), f(r.metrics(b)?))))
            .unzip()
    }

    /// Copy with every wall-clock figure zeroed, for determinism checks.
    pub fn without_timings(&self) -> MetricsReport {
        let mut r = self.clone();
        r.seconds = 0.0;
        for a in &mut r.algorithms {
            a.seconds = 0.0;
        }
        for rep in &mut r.replications {
            rep.filter_seconds = 0.0;
            rep.reference_seconds = 0.0;
            for o in &mut rep.outcomes {
                if let Ok(m) = &mut o.result {
                    m.seconds = 0.0;
                }
            }
        }
        r
    }
}

/// Everything an algorithm run needs from one replication.
struct Context<M: StateSpaceModel> {
    data: Dataset,
    history: FilterHistory<M::Params, M::Stats>,
    ref_states: Vec<Summary>,
    ref_params: Vec<(&'static str, Summary)>,
    /// Start path for single-site chains.
    init_path: Vec<f64>,
    seed: Seed,
}

fn rep_seed(cfg: &ExperimentConfig, rep: usize) -> Seed {
    Seed(cfg.seed).derive(seeds::REPLICATION, rep as u64)
}

fn truth_of<M: StateSpaceModel>(cfg: &ExperimentConfig, model: &M) -> Result<M::Params> {
    match &cfg.truth {
        None => Ok(model.generating_params()),
        Some(v) if v.len() == M::Params::DIM => {
            let p = M::Params::from_values(v);
            p.check_support(false).map_err(|e| HarnessError::Usage(format!("truth: {e}")))?;
            Ok(p)
        }
        Some(v) => Err(HarnessError::Usage(format!(
            "truth has {} values, {} needs {} ({})",
            v.len(),
            model.name(),
            M::Params::DIM,
            M::Params::names().join(", ")
        ))),
    }
}

fn elapsed(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

/// An ancestral path of the Storvik filter, `x_1..x_T`, picked by final weight.
fn smc_path<P: Copy, S: Copy>(h: &FilterHistory<P, S>, seed: Seed) -> smcsmooth::Result<Vec<f64>> {
    let last = h.final_cloud();
    let j = sample_index(&last.log_weights, &mut Vec::new(), &mut seed.stream(seeds::INIT, 0, 0))
        .ok_or(smcsmooth::Error::DegenerateWeights { t: last.t, theta: None })?;
    Ok(h.ancestral_path(h.clouds.len(), j)?[1..].to_vec())
}

fn run_chain<M: StateSpaceModel>(
    model: &M,
    ys: &[f64],
    gibbs: bool,
    iterations: usize,
    init: &[f64],
    seed: Seed,
) -> smcsmooth::Result<McmcChain<M::Params>> {
    if gibbs {
        gibbs_ffbs(model, ys, ChainOptions::new(iterations), seed)
    } else {
        let opts = SingleSiteOptions { init: InitStrategy::Path(init.to_vec()), ..SingleSiteOptions::new(iterations) };
        single_site_mh(model, ys, &opts, seed)
    }
}

fn prepare<M: StateSpaceModel>(
    cfg: &ExperimentConfig,
    model: &M,
    truth: &M::Params,
    rep: usize,
) -> (std::result::Result<Context<M>, String>, f64, f64) {
    let seed = rep_seed(cfg, rep);
    let mut filter_seconds = 0.0;
    let mut reference_seconds = 0.0;
    let ctx = (|| {
        let x0 = model.initial_state().sample(&mut seed.stream(seeds::DATASET, 0, 0));
        let data = simulate(model, truth, cfg.t_len, x0, seed.derive(seeds::DATASET, 0))?;
        let start = Instant::now();
        let history = storvik_filter(model, &data.observations, cfg.n, &FilterOptions::default(), seed.derive(seeds::FILTER, 0))?;
        filter_seconds = elapsed(start);
        let init_path = smc_path(&history, seed)?;
        let start = Instant::now();
        let chain = run_chain(
            model,
            &data.observations,
            cfg.reference_is_gibbs(),
            cfg.reference_iterations(),
            &init_path,
            seed.derive(seeds::REFERENCE, 0),
        )?;
        reference_seconds = elapsed(start);
        Ok::<_, smcsmooth::Error>(Context {
            ref_states: chain.draws.state_summary(),
            ref_params: chain.draws.param_summary(),
            data,
            history,
            init_path,
            seed,
        })
    })()
    .map_err(|e| e.to_string());
    (ctx, filter_seconds, reference_seconds)
}

fn smooth<M: StateSpaceModel>(
    cfg: &ExperimentConfig,
    model: &M,
    ctx: &Context<M>,
    alg: Algorithm,
    spec: AlgorithmSpec,
) -> smcsmooth::Result<SmoothingDraws<M::Params>> {
    let seed = ctx.seed.derive(seeds::ALGORITHM, alg as u64);
    let ys = &ctx.data.observations;
    match alg {
        Algorithm::Pls => pls_smooth(model, &ctx.history, spec.draws, seed),
        Algorithm::PlsA => {
            let approx = fit_joint_gaussian(&ctx.history)?;
            plsa_smooth(model, &ctx.history, &approx, spec.draws, seed)
        }
        Algorithm::Refilter => {
            let thetas = final_param_draws(model, &ctx.history, spec.draws, seed.derive(seeds::ALGORITHM, 0))?;
            refilter_with_params(model, ys, &thetas, spec.state_particles, &FilterOptions::default(), seed)
        }
        Algorithm::RefilterFfbs => {
            let thetas = final_param_draws(model, &ctx.history, spec.draws, seed.derive(seeds::ALGORITHM, 0))?;
            ffbs_with_params(model, ys, &thetas, seed)
        }
        Algorithm::Mcmc => {
            run_chain(model, ys, cfg.reference_is_gibbs(), spec.iterations, &ctx.init_path, seed).map(|c| c.draws)
        }
    }
}

fn score<M: StateSpaceModel>(
    cfg: &ExperimentConfig,
    model: &M,
    ctx: &Context<M>,
    alg: Algorithm,
    spec: AlgorithmSpec,
) -> std::result::Result<RunMetrics, String> {
    let start = Instant::now();
    let draws = smooth(cfg, model, ctx, alg, spec).map_err(|e| e.to_string())?;
    let seconds = elapsed(start);
    let ref_means: Vec<f64> = ctx.ref_states.iter().map(|s| s.mean).collect();
    let ref_sds: Vec<f64> = ctx.ref_states.iter().map(|s| s.sd).collect();
    let errors = standardized_errors(&draws.state_means(), &ref_means, &ref_sds).map_err(|e| e.to_string())?;
    let maep = maep_star(&draws.param_summary(), &ctx.ref_params).map_err(|e| e.to_string())?;
    Ok(RunMetrics { mae_star: errors.iter().sum::<f64>() / errors.len() as f64, maep_star: maep, errors, seconds })
}

fn coverage<M: StateSpaceModel>(
    cfg: &ExperimentConfig,
    model: &M,
    ctx: &Context<M>,
    truth: &M::Params,
) -> smcsmooth::Result<Vec<ParamCoverage>> {
    let draws = final_param_draws(model, &ctx.history, cfg.coverage_draws, ctx.seed.derive(seeds::COVERAGE, 0))?;
    Ok(M::Params::names()
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let mut v: Vec<f64> = draws.iter().map(|p| p.get(k)).collect();
            v.sort_by(f64::total_cmp);
            let (lo, hi) = (stats::quantile_sorted(&v, 0.025), stats::quantile_sorted(&v, 0.975));
            let t = truth.get(k);
            ParamCoverage { name, lo, hi, truth: t, covered: lo <= t && t <= hi }
        })
        .collect())
}

fn replicate<M: StateSpaceModel>(
    cfg: &ExperimentConfig,
    model: &M,
    truth: &M::Params,
    specs: &[(Algorithm, AlgorithmSpec)],
    rep: usize,
) -> ReplicationRecord {
    let (ctx, filter_seconds, reference_seconds) = prepare(cfg, model, truth, rep);
    let mut record = ReplicationRecord {
        rep,
        seed: rep_seed(cfg, rep).0,
        failure: None,
        outcomes: Vec::new(),
        filter_seconds,
        reference_seconds,
        correlation: None,
        coverage: Vec::new(),
    };
    let ctx = match ctx {
        Ok(c) => c,
        Err(e) => {
            record.failure = Some(e);
            return record;
        }
    };
    let run = |&(alg, spec): &(Algorithm, AlgorithmSpec)| Outcome { algorithm: alg, result: score(cfg, model, &ctx, alg, spec) };
    record.outcomes = if cfg.timing { specs.iter().map(run).collect() } else { specs.par_iter().map(run).collect() };
    if cfg.correlation {
        record.correlation = state_param_correlation(&ctx.history).ok();
    }
    match coverage(cfg, model, &ctx, truth) {
        Ok(c) => record.coverage = c,
        Err(e) => record.failure = Some(format!("coverage: {e}")),
    }
    record
}

fn time_run<M: StateSpaceModel>(
    cfg: &ExperimentConfig,
    model: &M,
    ctx: &Context<M>,
    alg: Algorithm,
    spec: AlgorithmSpec,
) -> Result<f64> {
    let start = Instant::now();
    smooth(cfg, model, ctx, alg, spec).map_err(|e| HarnessError::Numerical(format!("calibrating {alg}: {e}")))?;
    Ok(elapsed(start))
}

fn knob_cap(cfg: &ExperimentConfig, alg: Algorithm) -> usize {
    match alg {
        Algorithm::Refilter => cfg.max_draws.min(cfg.n),
        Algorithm::Mcmc => cfg.reference_iterations(),
        _ => cfg.max_draws,
    }
}

/// Rescales each algorithm's knob on replication 0 so its run time matches
/// the target. Run single-threaded.
fn calibrate<M: StateSpaceModel>(
    cfg: &ExperimentConfig,
    model: &M,
    truth: &M::Params,
    specs: &mut [(Algorithm, AlgorithmSpec)],
) -> Result<Vec<Calibration>> {
    let ctx = prepare(cfg, model, truth, 0).0.map_err(|e| HarnessError::Numerical(format!("calibration run: {e}")))?;
    let (target, first) = match cfg.budget {
        Budget::Fixed => return Ok(Vec::new()),
        Budget::Seconds(s) => (s, 0),
        Budget::Match => {
            let (alg, spec) = specs[0];
            (time_run(cfg, model, &ctx, alg, spec)?, 1)
        }
    };
    let mut out = Vec::new();
    for (alg, spec) in specs.iter_mut().skip(first) {
        let cap = knob_cap(cfg, *alg);
        let mut knob = spec.knob(*alg).min(cap);
        let mut trials: Vec<(usize, f64)> = Vec::new();
        for _ in 0..CALIBRATION_ROUNDS {
            let s = time_run(cfg, model, &ctx, *alg, spec.with_knob(*alg, knob))?;
            trials.push((knob, s));
            if (s - target).abs() <= MATCH_TOLERANCE * target {
                break;
            }
            let next = ((knob as f64 * target / s.max(1e-9)).round() as usize).clamp(1, cap);
            if next == knob {
                break;
            }
            knob = next;
        }
        let &(chosen, s) = trials
            .iter()
            .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
            .expect("at least one trial");
        *spec = spec.with_knob(*alg, chosen);
        out.push(Calibration {
            algorithm: *alg,
            target_seconds: target,
            trials,
            chosen,
            capped: chosen == cap && s < (1.0 - MATCH_TOLERANCE) * target,
        });
    }
    Ok(out)
}

fn aggregate(
    specs: &[(Algorithm, AlgorithmSpec)],
    reps: &[ReplicationRecord],
    t_len: usize,
) -> Result<Vec<AlgorithmReport>> {
    specs
        .iter()
        .map(|&(alg, spec)| {
            let ok: Vec<&RunMetrics> = reps.iter().filter_map(|r| r.metrics(alg)).collect();
            let failures = reps.len() - ok.len();
            if (ok.len() as f64) < MIN_SUCCESS * reps.len() as f64 {
                let first = reps
                    .iter()
                    .find_map(|r| {
                        r.failure.clone().or_else(|| {
                            r.outcomes.iter().find(|o| o.algorithm == alg).and_then(|o| o.result.clone().err())
                        })
                    })
                    .unwrap_or_default();
                return Err(HarnessError::Numerical(format!(
                    "{alg}: only {} of {} runs succeeded (first failure: {first})",
                    ok.len(),
                    reps.len()
                )));
            }
            let m = ok.len() as f64;
            let mut curve_mean = vec![0.0; t_len];
            let mut curve_p95 = vec![0.0; t_len];
            for k in 0..t_len {
                let mut col: Vec<f64> = ok.iter().map(|r| r.errors[k]).collect();
                curve_mean[k] = col.iter().sum::<f64>() / m;
                col.sort_by(f64::total_cmp);
                curve_p95[k] = stats::quantile_sorted(&col, 0.95);
            }
            Ok(AlgorithmReport {
                algorithm: alg,
                spec,
                mae_star: ok.iter().map(|r| r.mae_star).sum::<f64>() / m,
                maep_star: ok.iter().map(|r| r.maep_star).sum::<f64>() / m,
                curve_mean,
                curve_p95,
                seconds: ok.iter().map(|r| r.seconds).sum::<f64>() / m,
                successes: ok.len(),
                failures,
            })
        })
        .collect()
}

fn run_model<M: StateSpaceModel>(cfg: &ExperimentConfig, model: &M) -> Result<MetricsReport> {
    let start = Instant::now();
    let truth = truth_of(cfg, model)?;
    let mut specs: Vec<(Algorithm, AlgorithmSpec)> = cfg.algorithms.iter().map(|a| (*a, cfg.spec(*a))).collect();
    if specs.iter().any(|(a, _)| *a == Algorithm::RefilterFfbs) && model.linear_transition(&truth, 1).is_none() {
        return Err(HarnessError::Usage(format!("refilter_ffbs needs a linear-Gaussian model, not {}", model.name())));
    }
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| HarnessError::Usage(e.to_string()))?;
    let calibration = single.install(|| calibrate(cfg, model, &truth, &mut specs))?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        pool = pool.num_threads(w);
    }
    let pool = pool.build().map_err(|e| HarnessError::Usage(e.to_string()))?;
    let replications: Vec<ReplicationRecord> =
        pool.install(|| (0..cfg.replications).into_par_iter().map(|r| replicate(cfg, model, &truth, &specs, r)).collect());
    let algorithms = aggregate(&specs, &replications, cfg.t_len)?;
    Ok(MetricsReport {
        model: model.name().to_string(),
        t_len: cfg.t_len,
        n: cfg.n,
        reference: if cfg.reference_is_gibbs() { "gibbs_ffbs" } else { "single_site_mh" },
        reference_iterations: cfg.reference_iterations(),
        algorithms,
        calibration,
        replications,
        seconds: elapsed(start),
    })
}

/// Runs the configured experiment and, when `cfg.out` is set, writes its
/// artifacts there.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let model = AnyModel::build(cfg.model, &cfg.priors, cfg.x0)?;
    let report = with_model!(&model, m => run_model(cfg, m))?;
    if let Some(dir) = &cfg.out {
        write_artifacts(cfg, &report, dir)?;
    }
    Ok(report)
}

fn csv_writer(dir: &Path, name: &str, files: &mut Vec<String>) -> Result<csv::Writer<std::fs::File>> {
    files.push(name.to_string());
    Ok(csv::Writer::from_path(dir.join(name))?)
}

/// Writes `metrics.csv`, `errors.csv`, `curves.csv`, `summary.csv`,
/// `coverage.csv`, `correlation.csv` (when computed), `calibration.csv` and
/// `manifest.json` into `dir`. Returns the written paths.
pub fn write_artifacts(cfg: &ExperimentConfig, report: &MetricsReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();

    let mut w = csv_writer(dir, "metrics.csv", &mut files)?;
    w.write_record(["rep", "algorithm", "status", "mae_star", "maep_star", "seconds", "error"])?;
    let mut e = csv_writer(dir, "errors.csv", &mut files)?;
    e.write_record(["rep", "algorithm", "t", "standardized_error"])?;
    for rep in &report.replications {
        if let Some(f) = &rep.failure {
            w.write_record([&rep.rep.to_string(), "", "failed", "", "", "", f.as_str()])?;
        }
        for o in &rep.outcomes {
            match &o.result {
                Ok(m) => {
                    w.write_record([
                        rep.rep.to_string(),
                        o.algorithm.to_string(),
                        "ok".into(),
                        m.mae_star.to_string(),
                        m.maep_star.to_string(),
                        m.seconds.to_string(),
                        String::new(),
                    ])?;
                    for (k, v) in m.errors.iter().enumerate() {
                        e.write_record([rep.rep.to_string(), o.algorithm.to_string(), (k + 1).to_string(), v.to_string()])?;
                    }
                }
                Err(msg) => {
                    w.write_record([&rep.rep.to_string(), o.algorithm.tag(), "failed", "", "", "", msg.as_str()])?;
                }
            }
        }
    }
    w.flush()?;
    e.flush()?;

    let mut c = csv_writer(dir, "curves.csv", &mut files)?;
    c.write_record(["algorithm", "t", "mean", "p95"])?;
    let mut s = csv_writer(dir, "summary.csv", &mut files)?;
    s.write_record([
        "algorithm",
        "draws",
        "state_particles",
        "iterations",
        "mae_star",
        "maep_star",
        "seconds",
        "successes",
        "failures",
    ])?;
    for a in &report.algorithms {
        for (k, (m, p)) in a.curve_mean.iter().zip(&a.curve_p95).enumerate() {
            c.write_record([a.algorithm.to_string(), (k + 1).to_string(), m.to_string(), p.to_string()])?;
        }
        s.write_record([
            a.algorithm.to_string(),
            a.spec.draws.to_string(),
            a.spec.state_particles.to_string(),
            a.spec.iterations.to_string(),
            a.mae_star.to_string(),
            a.maep_star.to_string(),
            a.seconds.to_string(),
            a.successes.to_string(),
            a.failures.to_string(),
        ])?;
    }
    c.flush()?;
    s.flush()?;

    let mut v = csv_writer(dir, "coverage.csv", &mut files)?;
    v.write_record(["rep", "param", "lo", "hi", "truth", "covered"])?;
    for rep in &report.replications {
        for p in &rep.coverage {
            v.write_record([
                rep.rep.to_string(),
                p.name.to_string(),
                p.lo.to_string(),
                p.hi.to_string(),
                p.truth.to_string(),
                p.covered.to_string(),
            ])?;
        }
    }
    v.flush()?;

    if report.replications.iter().any(|r| r.correlation.is_some()) {
        let mut w = csv_writer(dir, "correlation.csv", &mut files)?;
        w.write_record(["rep", "param", "t", "corr", "flagged"])?;
        for rep in &report.replications {
            if let Some(cc) = &rep.correlation {
                write_correlation_rows(&mut w, Some(rep.rep), cc)?;
            }
        }
        w.flush()?;
    }

    let mut w = csv_writer(dir, "calibration.csv", &mut files)?;
    w.write_record(["algorithm", "target_seconds", "knob", "seconds", "chosen"])?;
    for cal in &report.calibration {
        for (k, secs) in &cal.trials {
            w.write_record([
                cal.algorithm.to_string(),
                cal.target_seconds.to_string(),
                k.to_string(),
                secs.to_string(),
                (*k == cal.chosen).to_string(),
            ])?;
        }
    }
    w.flush()?;

    files.push("manifest.json".into());
    let manifest = serde_json::json!({
        "config": cfg,
        "model": report.model,
        "reference": { "method": report.reference, "iterations": report.reference_iterations },
        "seeds": report.replications.iter().map(|r| r.seed).collect::<Vec<_>>(),
        "timings": {
            "total_seconds": report.seconds,
            "filter_seconds": report.replications.iter().map(|r| r.filter_seconds).collect::<Vec<_>>(),
            "reference_seconds": report.replications.iter().map(|r| r.reference_seconds).collect::<Vec<_>>(),
            "algorithm_seconds": report.algorithms.iter().map(|a| (a.algorithm.tag(), a.seconds)).collect::<std::collections::BTreeMap<_, _>>(),
        },
        "budgets": report.algorithms.iter().map(|a| (a.algorithm.tag(), a.spec)).collect::<std::collections::BTreeMap<_, _>>(),
        "calibration": report.calibration,
        "files": files,
    });
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(files.iter().map(|f| dir.join(f)).collect())
}

/// Rows `rep,param,t,corr,flagged` (or without `rep`).
pub fn write_correlation_rows<W: std::io::Write>(
    w: &mut csv::Writer<W>,
    rep: Option<usize>,
    cc: &CorrelationCurves,
) -> Result<()> {
    for (p, name) in cc.names.iter().enumerate() {
        for (k, (v, f)) in cc.values[p].iter().zip(&cc.flagged[p]).enumerate() {
            let mut row = Vec::with_capacity(5);
            if let Some(r) = rep {
                row.push(r.to_string());
            }
            row.extend([name.to_string(), (k + 1).to_string(), v.to_string(), f.to_string()]);
            w.write_record(&row)?;
        }
    }
    Ok(())
}
