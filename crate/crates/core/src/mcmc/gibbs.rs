use super::{draw_x0, ChainOptions, McmcChain};
use crate::error::{Error, Result};
use crate::filters::{kalman_filter, LinearSystem};
use crate::model::{check_observations, StateSpaceModel};
use crate::rng::{domain, Seed};
use crate::smoothers::{ffbs_draw, provenance, Method, SmoothingDraws};

/// Two-block Gibbs sampler for linear-Gaussian models: the whole state path by
/// forward-filtering backward-sampling, then `theta` from its conjugate
/// conditional.
pub fn gibbs_ffbs<M: StateSpaceModel>(
    model: &M,
    ys: &[f64],
    opts: ChainOptions,
    seed: Seed,
) -> Result<McmcChain<M::Params>> {
    check_observations(model, ys)?;
    if ys.is_empty() || opts.iterations == 0 {
        return Err(Error::Shape("need at least one observation and one iteration".into()));
    }
    let t_len = ys.len();
    let mut path = Vec::with_capacity(t_len + 1);
    path.push(model.initial_state().mean());
    path.extend(model.crude_states(ys));
    let mut rng = seed.stream(domain::MCMC, 0, u64::MAX);
    let mut theta = model.sample_params(&model.batch_posterior(&path, ys)?, &mut rng);
    if LinearSystem::from_model(model, &theta, t_len).is_none() {
        return Err(Error::Unavailable(format!("{} is not linear-Gaussian; use single-site sampling", model.name())));
    }

    let burn_in = opts.burn_in();
    let mut draws = SmoothingDraws::new(t_len, Method::GibbsFfbs, provenance(seed, 0, 0, 0));
    for iter in 0..opts.iterations {
        let mut rng = seed.stream(domain::MCMC, iter as u64, 0);
        let sys = LinearSystem::from_model(model, &theta, t_len)
            .ok_or_else(|| Error::Unavailable("linear hooks vanished".into()))?;
        let moments = kalman_filter(&sys, ys)?;
        let xs = ffbs_draw(&sys, &moments, &mut rng)?;
        path[0] = draw_x0(model, xs[0], &theta, &mut rng).unwrap_or(path[0]);
        path[1..].copy_from_slice(&xs);
        theta = model.sample_params(&model.batch_posterior(&path, ys)?, &mut rng);
        if opts.keeps(iter) {
            draws.push(&path[1..], theta);
        }
    }
    Ok(McmcChain {
        draws,
        acceptance: vec![("states".into(), 1.0), ("theta".into(), 1.0)],
        burn_in,
        iterations: opts.iterations,
        thin: opts.thin.max(1),
        init: "crude states from observations".into(),
        warnings: Vec::new(),
    })
}
