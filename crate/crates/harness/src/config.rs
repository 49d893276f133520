//! Experiment configuration and its flat `key = value` file format.
//!
//! One setting per line, `#` starts a comment, list values are comma
//! separated. Recognized keys:
//!
//! | key | meaning | default |
//! |---|---|---|
//! | `model` | `ar1`, `growth`, `chaotic` or `sv` | `ar1` |
//! | `T` | series length | 100 |
//! | `replications` | simulated datasets | 50 |
//! | `seed` | master seed | 1 |
//! | `out` | artifact directory | none |
//! | `workers` | parallel replications | all cores |
//! | `truth` | generating parameters in model order | model benchmark values |
//! | `x0` | fixed initial state | model default |
//! | `prior.<key>` | prior hyperparameter override, e.g. `prior.m0 = 0.5` | |
//! | `n` | particles in the shared Storvik filter (N) | 5000 |
//! | `algorithms` | any of `pls, plsa, refilter, refilter_ffbs, mcmc` | `pls, plsa, refilter` |
//! | `pls.m`, `plsa.m` | smoothed draws (M) | N |
//! | `refilter.m0` | parameter draws (N0) | N / 10 |
//! | `refilter.n0` | particles per conditional filter (n0) | 150 |
//! | `refilter_ffbs.m0` | parameter draws for Kalman refiltering | N |
//! | `mcmc.iterations` | short-MCMC competitor length | 5000 |
//! | `reference` | `auto`, `gibbs` or `single_site` | `auto` |
//! | `reference.iterations` | reference chain length | 20000 (Gibbs), 100000 (single site) |
//! | `budget` | `fixed`, `match`, or a target in seconds | `fixed` |
//! | `budget.max_draws` | cap on any calibrated draw count | 50000 |
//! | `timing` | `on` runs algorithms serially inside a replication | `on` |
//! | `correlation` | compute state/parameter correlation curves | `on` |
//! | `coverage.draws` | parameter draws behind the final 95% intervals | 4000 |
//!
//! Under `budget = match` the first listed algorithm is the anchor and the
//! others are rescaled on replication 0 until their run time is within 15% of
//! it. Refiltering is capped at `N0 <= N`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ar1,
    Growth,
    Chaotic,
    Sv,
}

impl FromStr for ModelKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ar1" | "ar" => Ok(ModelKind::Ar1),
            "growth" | "nonlinear" => Ok(ModelKind::Growth),
            "chaotic" | "ricker" => Ok(ModelKind::Chaotic),
            "sv" | "stochastic_volatility" => Ok(ModelKind::Sv),
            _ => Err(HarnessError::Usage(format!("unknown model `{s}` (ar1, growth, chaotic, sv)"))),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Ar1 => "ar1",
            ModelKind::Growth => "growth",
            ModelKind::Chaotic => "chaotic",
            ModelKind::Sv => "sv",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Pls,
    PlsA,
    Refilter,
    RefilterFfbs,
    Mcmc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] =
        [Algorithm::Pls, Algorithm::PlsA, Algorithm::Refilter, Algorithm::RefilterFfbs, Algorithm::Mcmc];

    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::Pls => "pls",
            Algorithm::PlsA => "plsa",
            Algorithm::Refilter => "refilter",
            Algorithm::RefilterFfbs => "refilter_ffbs",
            Algorithm::Mcmc => "mcmc",
        }
    }
}

impl FromStr for Algorithm {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pls" => Ok(Algorithm::Pls),
            "plsa" | "pls_a" => Ok(Algorithm::PlsA),
            "refilter" | "refiltering" => Ok(Algorithm::Refilter),
            "refilter_ffbs" | "refiltering_ffbs" => Ok(Algorithm::RefilterFfbs),
            "mcmc" => Ok(Algorithm::Mcmc),
            _ => Err(HarnessError::Usage(format!(
                "unknown algorithm `{s}` (pls, plsa, refilter, refilter_ffbs, mcmc)"
            ))),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Budget of one algorithm. Which fields matter depends on the algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AlgorithmSpec {
    /// Smoothed draws (M) for PLS / PLS_a, parameter draws (N0) for refiltering.
    pub draws: usize,
    /// Particles per conditional filter (n0), refiltering only.
    pub state_particles: usize,
    /// Chain length for the short-MCMC competitor.
    pub iterations: usize,
}

impl AlgorithmSpec {
    /// The quantity budget matching rescales.
    pub fn knob(&self, alg: Algorithm) -> usize {
        match alg {
            Algorithm::Mcmc => self.iterations,
            _ => self.draws,
        }
    }

    pub fn with_knob(mut self, alg: Algorithm, v: usize) -> Self {
        match alg {
            Algorithm::Mcmc => self.iterations = v,
            _ => self.draws = v,
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    Auto,
    Gibbs,
    SingleSite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Fixed,
    Match,
    Seconds(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub truth: Option<Vec<f64>>,
    pub x0: Option<f64>,
    pub priors: Vec<(String, Vec<f64>)>,
    pub t_len: usize,
    pub replications: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub n: usize,
    pub algorithms: Vec<Algorithm>,
    pls_m: Option<usize>,
    plsa_m: Option<usize>,
    refilter_m0: Option<usize>,
    pub refilter_n0: usize,
    ffbs_m0: Option<usize>,
    pub mcmc_iterations: usize,
    pub reference: Reference,
    reference_iterations: Option<usize>,
    pub budget: Budget,
    pub max_draws: usize,
    pub timing: bool,
    pub correlation: bool,
    pub coverage_draws: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: ModelKind::Ar1,
            truth: None,
            x0: None,
            priors: Vec::new(),
            t_len: 100,
            replications: 50,
            seed: 1,
            out: None,
            workers: None,
            n: 5000,
            algorithms: vec![Algorithm::Pls, Algorithm::PlsA, Algorithm::Refilter],
            pls_m: None,
            plsa_m: None,
            refilter_m0: None,
            refilter_n0: 150,
            ffbs_m0: None,
            mcmc_iterations: 5000,
            reference: Reference::Auto,
            reference_iterations: None,
            budget: Budget::Fixed,
            max_draws: 50_000,
            timing: true,
            correlation: true,
            coverage_draws: 4000,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| HarnessError::Usage(format!("`{key}`: cannot parse `{v}`")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| parse_num(key, s)).collect()
}

fn parse_switch(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(HarnessError::Usage(format!("`{key}`: expected on/off, got `{v}`"))),
    }
}

impl ExperimentConfig {
    /// Parses a config file's contents on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Usage(format!("line {}: expected `key = value`", lineno + 1)))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| HarnessError::Usage(format!("line {}: {}", lineno + 1, e.to_string().trim_start_matches("usage: "))))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets one key. Used by the file parser and by command-line overrides.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "model" => self.model = v.parse()?,
            "truth" => self.truth = Some(parse_list(key, v)?),
            "x0" => self.x0 = Some(parse_num(key, v)?),
            "T" | "t" => self.t_len = parse_num(key, v)?,
            "replications" => self.replications = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "workers" => self.workers = Some(parse_num(key, v)?),
            "n" => self.n = parse_num(key, v)?,
            "algorithms" => {
                self.algorithms = v.split(',').map(|s| s.trim().parse()).collect::<Result<_>>()?;
            }
            "pls.m" => self.pls_m = Some(parse_num(key, v)?),
            "plsa.m" => self.plsa_m = Some(parse_num(key, v)?),
            "refilter.m0" => self.refilter_m0 = Some(parse_num(key, v)?),
            "refilter.n0" => self.refilter_n0 = parse_num(key, v)?,
            "refilter_ffbs.m0" => self.ffbs_m0 = Some(parse_num(key, v)?),
            "mcmc.iterations" => self.mcmc_iterations = parse_num(key, v)?,
            "reference" => {
                self.reference = match v {
                    "auto" => Reference::Auto,
                    "gibbs" => Reference::Gibbs,
                    "single_site" => Reference::SingleSite,
                    _ => return Err(HarnessError::Usage(format!("unknown reference `{v}`"))),
                }
            }
            "reference.iterations" => self.reference_iterations = Some(parse_num(key, v)?),
            "budget" => {
                self.budget = match v {
                    "fixed" => Budget::Fixed,
                    "match" => Budget::Match,
                    s => Budget::Seconds(parse_num(key, s)?),
                }
            }
            "budget.max_draws" => self.max_draws = parse_num(key, v)?,
            "timing" => self.timing = parse_switch(key, v)?,
            "correlation" => self.correlation = parse_switch(key, v)?,
            "coverage.draws" => self.coverage_draws = parse_num(key, v)?,
            k if k.starts_with("prior.") => {
                let name = k["prior.".len()..].to_string();
                self.priors.retain(|(n, _)| *n != name);
                self.priors.push((name, parse_list(key, v)?));
            }
            _ => return Err(HarnessError::Usage(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Usage(m));
        if self.t_len == 0 || self.replications == 0 || self.n == 0 {
            return bad("T, replications and n must be positive".into());
        }
        if self.algorithms.is_empty() {
            return bad("no algorithms listed".into());
        }
        for alg in &self.algorithms {
            let s = self.spec(*alg);
            if s.knob(*alg) == 0 || (*alg == Algorithm::Refilter && s.state_particles == 0) {
                return bad(format!("budget of `{alg}` must be positive"));
            }
        }
        if let Budget::Seconds(s) = self.budget {
            if s.is_nan() || s <= 0.0 {
                return bad("budget seconds must be positive".into());
            }
        }
        if self.reference_iterations() == 0 || self.max_draws == 0 || self.coverage_draws == 0 {
            return bad("reference.iterations, budget.max_draws and coverage.draws must be positive".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        Ok(())
    }

    /// Configured budget of `alg` with defaults filled in.
    pub fn spec(&self, alg: Algorithm) -> AlgorithmSpec {
        let draws = match alg {
            Algorithm::Pls => self.pls_m.unwrap_or(self.n),
            Algorithm::PlsA => self.plsa_m.unwrap_or(self.n),
            Algorithm::Refilter => self.refilter_m0.unwrap_or((self.n / 10).max(1)),
            Algorithm::RefilterFfbs => self.ffbs_m0.unwrap_or(self.n),
            Algorithm::Mcmc => 0,
        };
        AlgorithmSpec { draws, state_particles: self.refilter_n0, iterations: self.mcmc_iterations }
    }

    /// Whether the reference is the block Gibbs sampler.
    pub fn reference_is_gibbs(&self) -> bool {
        match self.reference {
            Reference::Auto => self.model == ModelKind::Ar1,
            Reference::Gibbs => true,
            Reference::SingleSite => false,
        }
    }

    pub fn reference_iterations(&self) -> usize {
        self.reference_iterations.unwrap_or(if self.reference_is_gibbs() { 20_000 } else { 100_000 })
    }
}
