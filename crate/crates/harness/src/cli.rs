//! The `smcsmooth` command line.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use smcsmooth::evidence::{harmonic_mean_log_marginal, smc_log_marginal};
use smcsmooth::filters::{bootstrap_filter, liu_west_filter, storvik_filter, FilterOptions};
use smcsmooth::io::{draws_to_columns, history_to_columns, write_draws_summary, write_history_summary, write_trace};
use smcsmooth::mcmc::{gibbs_ffbs, single_site_mh, ChainOptions, SingleSiteOptions};
use smcsmooth::model::{simulate, ParamVector, StateSpaceModel, StochasticVolatility};
use smcsmooth::smoothers::{
    fit_joint_gaussian, pls_smooth, plsa_smooth, refilter_ffbs, refilter_smooth, ForwardLearner, RefilterOptions,
    SmoothingDraws,
};
use smcsmooth::Seed;

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::experiment::{run_experiment, write_correlation_rows};
use crate::ingest::{ingest_returns, load_observations, write_dataset};
use crate::metrics::state_param_correlation;
use crate::models::AnyModel;
use crate::with_model;

#[derive(Debug, Parser)]
#[command(name = "smcsmooth", version, about = "Particle smoothing with parameter learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// ar1, growth, chaotic or sv.
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Flat `key = value` experiment file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Forward filter particles (N).
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Particles per parameter-conditional filter in refiltering (n0).
    #[arg(long, global = true)]
    pub n0: Option<usize>,
    /// Parameter draws in refiltering (N0).
    #[arg(long, global = true)]
    pub m0: Option<usize>,
    /// Series length for simulated data.
    #[arg(long = "T", global = true)]
    pub t_len: Option<usize>,
    /// Generating parameters, comma separated in model order.
    #[arg(long, global = true)]
    pub truth: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a dataset and write `dataset.csv`.
    Simulate,
    /// Run a forward filter.
    Filter {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FilterMethod::Storvik)]
        method: FilterMethod,
        /// Liu-West shrinkage.
        #[arg(long, default_value_t = 0.974)]
        a: f64,
    },
    /// Draw joint smoothed paths and parameters.
    Smooth {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = SmoothMethod::Refilter)]
        method: SmoothMethod,
        /// Draws (M) for PLS and PLS_a; defaults to N.
        #[arg(long)]
        draws: Option<usize>,
    },
    /// Run a reference MCMC chain.
    Mcmc {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = McmcMethod::SingleSite)]
        method: McmcMethod,
        #[arg(long, default_value_t = 20_000)]
        iterations: usize,
    },
    /// Print marginal likelihood estimates as CSV.
    Evidence {
        #[arg(long)]
        data: Option<PathBuf>,
        /// Particle counts; defaults to N.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        /// Chain length for the harmonic-mean estimate; 0 skips it.
        #[arg(long, default_value_t = 0)]
        iterations: usize,
    },
    /// Replicated benchmark at (optionally) matched budgets.
    Bench {
        /// Algorithms, comma separated; overrides the config.
        #[arg(long)]
        algorithms: Option<String>,
        #[arg(long)]
        replications: Option<usize>,
    },
    /// Filtered correlation between states and parameters.
    Correlate {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Stochastic volatility on a return series.
    Sv {
        /// CSV with `date,price` or `date,return`.
        #[arg(long)]
        returns: PathBuf,
        /// Single-site MCMC cross-check length; 0 skips it.
        #[arg(long, default_value_t = 0)]
        iterations: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FilterMethod {
    Storvik,
    Bootstrap,
    LiuWest,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SmoothMethod {
    Pls,
    Plsa,
    Refilter,
    RefilterFfbs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum McmcMethod {
    Gibbs,
    SingleSite,
}

/// Parses `args` and runs the command.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(HarnessError::Usage(e.to_string())),
    };
    execute(cli)
}

fn config_of(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let mut set = |k: &str, v: Option<String>| v.map_or(Ok(()), |v| cfg.set(k, &v));
    set("model", common.model.clone())?;
    set("seed", common.seed.map(|v| v.to_string()))?;
    set("workers", common.workers.map(|v| v.to_string()))?;
    set("n", common.n.map(|v| v.to_string()))?;
    set("refilter.n0", common.n0.map(|v| v.to_string()))?;
    set("refilter.m0", common.m0.map(|v| v.to_string()))?;
    set("refilter_ffbs.m0", common.m0.map(|v| v.to_string()))?;
    set("T", common.t_len.map(|v| v.to_string()))?;
    set("truth", common.truth.clone())?;
    if let Some(o) = &common.out {
        cfg.out = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn truth_of<M: StateSpaceModel>(cfg: &ExperimentConfig, model: &M) -> Result<M::Params> {
    match &cfg.truth {
        None => Ok(model.generating_params()),
        Some(v) if v.len() == M::Params::DIM => Ok(M::Params::from_values(v)),
        Some(v) => Err(HarnessError::Usage(format!("truth needs {} values, got {}", M::Params::DIM, v.len()))),
    }
}

/// Observations from `--data`, or a dataset simulated from the truth.
fn observations<M: StateSpaceModel>(cfg: &ExperimentConfig, model: &M, data: &Option<PathBuf>) -> Result<Vec<f64>> {
    match data {
        Some(p) => load_observations(p),
        None => {
            let truth = truth_of(cfg, model)?;
            let x0 = model.initial_state().mean();
            Ok(simulate(model, &truth, cfg.t_len, x0, Seed(cfg.seed))?.observations)
        }
    }
}

fn workers(cfg: &ExperimentConfig) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        b = b.num_threads(w);
    }
    b.build().map_err(|e| HarnessError::Usage(e.to_string()))
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = config_of(&cli.common)?;
    if let Command::Bench { algorithms, replications } = &cli.command {
        if let Some(a) = algorithms {
            cfg.set("algorithms", a)?;
        }
        if let Some(r) = replications {
            cfg.replications = *r;
        }
        if cfg.out.is_none() {
            cfg.out = Some(PathBuf::from("out"));
        }
        return bench(&cfg);
    }
    let pool = workers(&cfg)?;
    if let Command::Sv { returns, iterations } = &cli.command {
        return pool.install(|| sv(&cfg, returns, *iterations));
    }
    let model = AnyModel::build(cfg.model, &cfg.priors, cfg.x0)?;
    pool.install(|| with_model!(&model, m => dispatch(&cli.command, &cfg, m)))
}

fn dispatch<M: StateSpaceModel>(cmd: &Command, cfg: &ExperimentConfig, model: &M) -> Result<()> {
    let seed = Seed(cfg.seed);
    match cmd {
        Command::Simulate => {
            let truth = truth_of(cfg, model)?;
            let d = simulate(model, &truth, cfg.t_len, model.initial_state().mean(), seed)?;
            let dir = out_dir(cfg)?;
            write_dataset(&d, create(&dir, "dataset.csv")?)?;
            println!("wrote {} observations to {}", d.len(), dir.join("dataset.csv").display());
        }
        Command::Filter { data, method, a } => {
            let ys = observations(cfg, model, data)?;
            let opts = FilterOptions::default();
            let h = match method {
                FilterMethod::Storvik => storvik_filter(model, &ys, cfg.n, &opts, seed)?,
                FilterMethod::Bootstrap => bootstrap_filter(model, &truth_of(cfg, model)?, &ys, cfg.n, &opts, seed)?,
                FilterMethod::LiuWest => liu_west_filter(model, &ys, cfg.n, *a, &opts, seed)?,
            };
            let dir = out_dir(cfg)?;
            history_to_columns(model, &h).write_to(&mut create(&dir, "history.smcc")?)?;
            write_history_summary(&h, &mut create(&dir, "filter_summary.csv")?)?;
            let ev = smc_log_marginal(&h)?;
            println!("log_marginal,{}", ev.log_marginal);
        }
        Command::Smooth { data, method, draws } => {
            let ys = observations(cfg, model, data)?;
            let m = draws.unwrap_or(cfg.n);
            let spec = cfg.spec(Algorithm::Refilter);
            let d: SmoothingDraws<M::Params> = match method {
                SmoothMethod::Pls => pls_smooth(model, &storvik_filter(model, &ys, cfg.n, &FilterOptions::default(), seed)?, m, seed)?,
                SmoothMethod::Plsa => {
                    let h = storvik_filter(model, &ys, cfg.n, &FilterOptions::default(), seed)?;
                    plsa_smooth(model, &h, &fit_joint_gaussian(&h)?, m, seed)?
                }
                SmoothMethod::Refilter => {
                    let opts = RefilterOptions {
                        n: cfg.n,
                        param_draws: spec.draws,
                        state_particles: spec.state_particles,
                        learner: ForwardLearner::Storvik,
                        filter: FilterOptions::default(),
                    };
                    refilter_smooth(model, &ys, &opts, seed)?
                }
                SmoothMethod::RefilterFfbs => {
                    refilter_ffbs(model, &ys, cfg.n, cfg.spec(Algorithm::RefilterFfbs).draws, seed)?
                }
            };
            let dir = out_dir(cfg)?;
            draws_to_columns(&d).write_to(&mut create(&dir, "draws.smcc")?)?;
            write_draws_summary(&d, &mut create(&dir, "smooth_summary.csv")?)?;
            print_params(&d);
        }
        Command::Mcmc { data, method, iterations } => {
            let ys = observations(cfg, model, data)?;
            let chain = match method {
                McmcMethod::Gibbs => gibbs_ffbs(model, &ys, ChainOptions::new(*iterations), seed)?,
                McmcMethod::SingleSite => single_site_mh(model, &ys, &SingleSiteOptions::new(*iterations), seed)?,
            };
            let dir = out_dir(cfg)?;
            write_trace(&chain, &mut create(&dir, "trace.csv")?)?;
            write_draws_summary(&chain.draws, &mut create(&dir, "mcmc_summary.csv")?)?;
            for w in &chain.warnings {
                eprintln!("warning: {w}");
            }
            for (block, rate) in &chain.acceptance {
                println!("acceptance,{block},{rate}");
            }
            print_params(&chain.draws);
        }
        Command::Evidence { data, sizes, iterations } => {
            let ys = observations(cfg, model, data)?;
            let sizes = if sizes.is_empty() { vec![cfg.n] } else { sizes.clone() };
            let mut out = std::io::stdout().lock();
            writeln!(out, "method,N,log_marginal")?;
            for (i, n) in sizes.iter().enumerate() {
                let h = storvik_filter(model, &ys, *n, &FilterOptions::default(), seed.derive(1, i as u64))?;
                let ev = smc_log_marginal(&h)?;
                writeln!(out, "{},{},{}", ev.method.tag(), n, ev.log_marginal)?;
            }
            if *iterations > 0 {
                let chain = match gibbs_ffbs(model, &ys, ChainOptions::new(*iterations), seed) {
                    Err(smcsmooth::Error::Unavailable(_)) => single_site_mh(model, &ys, &SingleSiteOptions::new(*iterations), seed)?,
                    other => other?,
                };
                let ev = harmonic_mean_log_marginal(&chain, model, &ys)?;
                writeln!(out, "{},{},{}", ev.method.tag(), ev.n, ev.log_marginal)?;
            }
        }
        Command::Correlate { data } => {
            let ys = observations(cfg, model, data)?;
            let h = storvik_filter(model, &ys, cfg.n, &FilterOptions::default(), seed)?;
            let cc = state_param_correlation(&h)?;
            let dir = out_dir(cfg)?;
            let mut w = csv::Writer::from_writer(create(&dir, "correlation.csv")?);
            w.write_record(["param", "t", "corr", "flagged"])?;
            write_correlation_rows(&mut w, None, &cc)?;
            w.flush()?;
            let t = ys.len();
            let (early, late) = (5.min(t), t.saturating_sub(10).max(1));
            for (p, name) in cc.names.iter().enumerate() {
                println!("{name},early_mean_abs,{},late_mean_abs,{}", cc.mean_abs(p, 1, early), cc.mean_abs(p, late, t));
            }
        }
        Command::Sv { .. } | Command::Bench { .. } => unreachable!("handled before dispatch"),
    }
    Ok(())
}

fn print_params<P: ParamVector>(d: &SmoothingDraws<P>) {
    println!("param,mean,sd,q025,q975");
    for (name, s) in d.param_summary() {
        println!("{name},{},{},{},{}", s.mean, s.sd, s.q025, s.q975);
    }
}

fn bench(cfg: &ExperimentConfig) -> Result<()> {
    let report = run_experiment(cfg)?;
    println!("algorithm,draws,state_particles,iterations,mae_star,maep_star,seconds,successes,failures");
    for a in &report.algorithms {
        println!(
            "{},{},{},{},{:.4},{:.4},{:.3},{},{}",
            a.algorithm, a.spec.draws, a.spec.state_particles, a.spec.iterations, a.mae_star, a.maep_star, a.seconds,
            a.successes, a.failures
        );
    }
    if let Some(dir) = &cfg.out {
        eprintln!("artifacts in {}", dir.display());
    }
    Ok(())
}

/// `sv` subcommand body, separate because the model is fixed.
pub fn sv(cfg: &ExperimentConfig, returns: &Path, iterations: usize) -> Result<()> {
    let r = ingest_returns(returns)?;
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    let mut model = StochasticVolatility::default();
    for (k, v) in &cfg.priors {
        model.set_hyper(k, v)?;
    }
    if let Some(x) = cfg.x0 {
        model.set_hyper("x0", &[x])?;
    }
    let seed = Seed(cfg.seed);
    let spec = cfg.spec(Algorithm::Refilter);
    let opts = RefilterOptions {
        n: cfg.n,
        param_draws: spec.draws,
        state_particles: spec.state_particles,
        learner: ForwardLearner::Storvik,
        filter: FilterOptions::default(),
    };
    let d = refilter_smooth(&model, &r.values, &opts, seed)?;
    let chain = if iterations > 0 {
        let init = model.crude_states(&r.values);
        let o = SingleSiteOptions {
            init: smcsmooth::mcmc::InitStrategy::Path(init),
            ..SingleSiteOptions::new(iterations)
        };
        Some(single_site_mh(&model, &r.values, &o, seed.derive(2, 0))?)
    } else {
        None
    };

    let dir = out_dir(cfg)?;
    let mut w = csv::Writer::from_writer(create(&dir, "sv_states.csv")?);
    let mut header = vec!["t", "date", "y", "refilter_q025", "refilter_median", "refilter_q975"];
    if chain.is_some() {
        header.extend(["mcmc_q025", "mcmc_median", "mcmc_q975"]);
    }
    w.write_record(&header)?;
    let rs = d.state_summary();
    let ms = chain.as_ref().map(|c| c.draws.state_summary());
    for k in 0..r.values.len() {
        let mut row = vec![
            (k + 1).to_string(),
            r.dates[k].clone(),
            r.values[k].to_string(),
            rs[k].q025.to_string(),
            rs[k].q500.to_string(),
            rs[k].q975.to_string(),
        ];
        if let Some(ms) = &ms {
            row.extend([ms[k].q025.to_string(), ms[k].q500.to_string(), ms[k].q975.to_string()]);
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    write_draws_summary(&d, &mut create(&dir, "sv_refilter_summary.csv")?)?;
    print_params(&d);
    if let (Some(ms), Some(c)) = (&ms, &chain) {
        let diff: f64 = rs.iter().zip(ms).map(|(a, b)| (a.q500 - b.q500).abs() / b.sd).sum::<f64>() / rs.len() as f64;
        println!("mean_standardized_median_difference,{diff}");
        write_trace(c, &mut create(&dir, "sv_trace.csv")?)?;
    }
    Ok(())
}
