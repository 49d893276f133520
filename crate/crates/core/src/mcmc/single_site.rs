use super::{ChainOptions, McmcChain};
use crate::error::{Error, Result};
use crate::model::{check_observations, InitialState, StateSpaceModel};
use crate::rng::{domain, Seed};
use crate::smoothers::{provenance, Method, SmoothingDraws};
use crate::stats;

const ADAPT_WINDOW: usize = 50;
const STUCK_WINDOW: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub enum InitStrategy {
    /// Invert the observation equation crudely.
    Crude,
    /// Start from a given `x_1..x_T`.
    Path(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleSiteOptions {
    pub chain: ChainOptions,
    /// Initial random-walk scale, shared by all sites.
    pub proposal_sd: f64,
    /// Tune each site's scale during burn-in towards 30-50% acceptance.
    pub adapt: bool,
    pub init: InitStrategy,
}

impl SingleSiteOptions {
    pub fn new(iterations: usize) -> Self {
        SingleSiteOptions { chain: ChainOptions::new(iterations), proposal_sd: 0.5, adapt: true, init: InitStrategy::Crude }
    }
}

/// Unnormalized log full conditional of `x_t` at value `x`, given the rest of
/// `path` (which holds `x_0..x_T`). `t = 0` targets a diffuse initial state.
pub fn site_log_target<M: StateSpaceModel>(
    model: &M,
    theta: &M::Params,
    path: &[f64],
    ys: &[f64],
    t: usize,
    x: f64,
) -> f64 {
    let t_len = ys.len();
    let mut lp = if t == 0 {
        match model.initial_state() {
            InitialState::Diffuse { mean, var } => stats::normal_logpdf(x, mean, var),
            InitialState::Fixed(x0) => {
                if x == x0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    } else {
        model.transition_logpdf(x, path[t - 1], t, theta) + model.observation_logpdf(ys[t - 1], x, theta)
    };
    if t < t_len {
        lp += model.transition_logpdf(path[t + 1], x, t + 1, theta);
    }
    lp
}

/// Metropolis-within-Gibbs: each `x_t` in turn by a Gaussian random walk, then
/// `theta` from its conjugate conditional.
pub fn single_site_mh<M: StateSpaceModel>(
    model: &M,
    ys: &[f64],
    opts: &SingleSiteOptions,
    seed: Seed,
) -> Result<McmcChain<M::Params>> {
    check_observations(model, ys)?;
    let t_len = ys.len();
    if t_len == 0 || opts.chain.iterations == 0 {
        return Err(Error::Shape("need at least one observation and one iteration".into()));
    }
    if !(opts.proposal_sd > 0.0) || !opts.proposal_sd.is_finite() {
        return Err(Error::domain("proposal_sd", format!("must be positive, got {}", opts.proposal_sd)));
    }
    let diffuse = matches!(model.initial_state(), InitialState::Diffuse { .. });
    let first = usize::from(!diffuse);

    let mut path = Vec::with_capacity(t_len + 1);
    path.push(model.initial_state().mean());
    let init = match &opts.init {
        InitStrategy::Crude => {
            path.extend(model.crude_states(ys));
            "crude states from observations".to_string()
        }
        InitStrategy::Path(p) => {
            if p.len() != t_len {
                return Err(Error::Shape(format!("initial path has {} states for {t_len} observations", p.len())));
            }
            path.extend_from_slice(p);
            "supplied path".to_string()
        }
    };
    if let Some(t) = path.iter().position(|x| !x.is_finite()) {
        return Err(Error::Numerical { t, what: "non-finite initial state".into() });
    }
    let mut rng = seed.stream(domain::MCMC, 0, u64::MAX);
    let mut theta = model.sample_params(&model.batch_posterior(&path, ys)?, &mut rng);

    let burn_in = opts.chain.burn_in();
    let mut sd = vec![opts.proposal_sd; t_len + 1];
    let mut window_accepts = vec![0u32; t_len + 1];
    let (mut accepted, mut proposed) = (0u64, 0u64);
    let mut stuck_accepts = 0u64;
    let mut warnings = Vec::new();
    let mut draws = SmoothingDraws::new(t_len, Method::SingleSiteMh, provenance(seed, 0, 0, 0));

    for iter in 0..opts.chain.iterations {
        let mut rng = seed.stream(domain::MCMC, iter as u64, 0);
        let mut sweep_accepts = 0u64;
        for t in first..=t_len {
            let current = path[t];
            let prop = current + sd[t] * stats::std_normal(&mut rng);
            let log_ratio = site_log_target(model, &theta, &path, ys, t, prop)
                - site_log_target(model, &theta, &path, ys, t, current);
            if stats::uniform(&mut rng).ln() < log_ratio {
                path[t] = prop;
                sweep_accepts += 1;
                window_accepts[t] += 1;
            }
        }
        theta = model.sample_params(&model.batch_posterior(&path, ys)?, &mut rng);

        if iter < burn_in {
            if opts.adapt && (iter + 1) % ADAPT_WINDOW == 0 {
                for (s, a) in sd.iter_mut().zip(window_accepts.iter_mut()) {
                    let rate = f64::from(*a) / ADAPT_WINDOW as f64;
                    if rate < 0.3 {
                        *s *= 0.8;
                    } else if rate > 0.5 {
                        *s *= 1.25;
                    }
                    *a = 0;
                }
            }
        } else {
            accepted += sweep_accepts;
            proposed += (t_len + 1 - first) as u64;
            stuck_accepts += sweep_accepts;
            let done = iter + 1 - burn_in;
            if done.is_multiple_of(STUCK_WINDOW) || iter + 1 == opts.chain.iterations {
                if stuck_accepts == 0 {
                    let start = burn_in + (done - 1) / STUCK_WINDOW * STUCK_WINDOW;
                    warnings.push(format!("chain stuck: no state move accepted in iterations {start}..{}", iter + 1));
                }
                stuck_accepts = 0;
            }
        }
        if opts.chain.keeps(iter) {
            draws.push(&path[1..], theta);
        }
    }
    let rate = if proposed > 0 { accepted as f64 / proposed as f64 } else { f64::NAN };
    Ok(McmcChain {
        draws,
        acceptance: vec![("states".into(), rate), ("theta".into(), 1.0)],
        burn_in,
        iterations: opts.chain.iterations,
        thin: opts.chain.thin.max(1),
        init,
        warnings,
    })
}
