use super::{ffbs_draw, godsill_backward, provenance, Method, SmoothingDraws};
use crate::error::{Error, Result};
use crate::filters::{
    bootstrap_filter, final_param_draws, kalman_filter, liu_west_filter, storvik_filter, FilterHistory, FilterOptions,
    LinearSystem,
};
use crate::model::StateSpaceModel;
use crate::parallel;
use crate::rng::{domain, Seed};

/// Forward learning filter used to obtain `theta ~ p(theta | y^T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForwardLearner {
    Storvik,
    LiuWest { a: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefilterOptions {
    /// Particles in the forward learning filter (N).
    pub n: usize,
    /// Parameter draws, one trajectory each (N0).
    pub param_draws: usize,
    /// Particles in each parameter-conditional filter (n0).
    pub state_particles: usize,
    pub learner: ForwardLearner,
    pub filter: FilterOptions,
}

impl RefilterOptions {
    /// The O(TN^2) configuration `N0 = n0 = N`.
    pub fn quadratic(n: usize) -> Self {
        RefilterOptions {
            n,
            param_draws: n,
            state_particles: n,
            learner: ForwardLearner::Storvik,
            filter: FilterOptions::default(),
        }
    }
}

pub(crate) fn learn<M: StateSpaceModel>(
    model: &M,
    ys: &[f64],
    n: usize,
    learner: ForwardLearner,
    filter: &FilterOptions,
    seed: Seed,
) -> Result<FilterHistory<M::Params, M::Stats>> {
    match learner {
        ForwardLearner::Storvik => storvik_filter(model, ys, n, filter, seed),
        ForwardLearner::LiuWest { a } => liu_west_filter(model, ys, n, a, filter, seed),
    }
}

/// Refiltering: learn `p(theta | y^T)` with a forward filter, then for each of
/// `N0` parameter draws run a fresh `n0`-particle bootstrap filter conditioned
/// on it and draw one path by backward simulation.
pub fn refilter_smooth<M: StateSpaceModel>(
    model: &M,
    ys: &[f64],
    opts: &RefilterOptions,
    seed: Seed,
) -> Result<SmoothingDraws<M::Params>> {
    if opts.param_draws > opts.n || opts.state_particles > opts.n {
        return Err(Error::Shape(format!(
            "refiltering needs N0 <= N and n0 <= N (N={}, N0={}, n0={})",
            opts.n, opts.param_draws, opts.state_particles
        )));
    }
    let history = learn(model, ys, opts.n, opts.learner, &opts.filter, seed)?;
    let thetas = final_param_draws(model, &history, opts.param_draws, seed.derive(domain::SELECT, 0))?;
    let mut out = refilter_with_params(model, ys, &thetas, opts.state_particles, &opts.filter, seed)?;
    out.provenance.n = opts.n;
    Ok(out)
}

/// The second refiltering stage for given parameter draws.
pub fn refilter_with_params<M: StateSpaceModel>(
    model: &M,
    ys: &[f64],
    thetas: &[M::Params],
    state_particles: usize,
    filter: &FilterOptions,
    seed: Seed,
) -> Result<SmoothingDraws<M::Params>> {
    let paths = parallel::map_indexed(thetas.len(), |i| {
        let theta = &thetas[i];
        let h = bootstrap_filter(model, theta, ys, state_particles, filter, seed.derive(domain::REFILTER, i as u64))?;
        let mut rng = seed.stream(domain::BACKWARD, i as u64, 1);
        godsill_backward(model, theta, &h, &mut rng)
    });
    let mut out = SmoothingDraws::new(
        ys.len(),
        Method::Refilter,
        provenance(seed, 0, thetas.len(), state_particles),
    );
    for (i, (path, theta)) in paths.into_iter().zip(thetas).enumerate() {
        let path = path.map_err(|e| Error::InDraw { index: i, source: Box::new(e) })?;
        out.push(&path, *theta);
    }
    Ok(out)
}

/// Refiltering with an exact Kalman filter and FFBS draw per parameter draw.
/// The model must expose linear-Gaussian coefficients.
pub fn refilter_ffbs<M: StateSpaceModel>(
    model: &M,
    ys: &[f64],
    n: usize,
    param_draws: usize,
    seed: Seed,
) -> Result<SmoothingDraws<M::Params>> {
    let history = storvik_filter(model, ys, n, &FilterOptions::default(), seed)?;
    let thetas = final_param_draws(model, &history, param_draws, seed.derive(domain::SELECT, 0))?;
    let mut out = ffbs_with_params(model, ys, &thetas, seed)?;
    out.provenance.n = n;
    Ok(out)
}

/// Kalman filter plus one FFBS path per parameter draw.
pub fn ffbs_with_params<M: StateSpaceModel>(
    model: &M,
    ys: &[f64],
    thetas: &[M::Params],
    seed: Seed,
) -> Result<SmoothingDraws<M::Params>> {
    let paths = parallel::map_indexed(thetas.len(), |i| {
        let sys = LinearSystem::from_model(model, &thetas[i], ys.len())
            .ok_or_else(|| Error::domain("model", format!("`{}` has no linear-Gaussian form", model.name())))?;
        let k = kalman_filter(&sys, ys)?;
        ffbs_draw(&sys, &k, &mut seed.stream(domain::BACKWARD, i as u64, 2))
    });
    let mut out = SmoothingDraws::new(ys.len(), Method::RefilterFfbs, provenance(seed, 0, thetas.len(), 0));
    for (i, (path, theta)) in paths.into_iter().zip(thetas).enumerate() {
        let path = path.map_err(|e| Error::InDraw { index: i, source: Box::new(e) })?;
        out.push(&path, *theta);
    }
    Ok(out)
}
