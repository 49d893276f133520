use super::{InitialState, LinearObservation, LinearTransition, StateSpaceModel};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// A model whose parameters are known: the prior is a point mass at `params`.
///
/// Learning filters run on this model reduce to filters with fixed parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMass<M: StateSpaceModel> {
    pub inner: M,
    pub params: M::Params,
}

impl<M: StateSpaceModel> PointMass<M> {
    pub fn new(inner: M, params: M::Params) -> Self {
        PointMass { inner, params }
    }
}

impl<M: StateSpaceModel> StateSpaceModel for PointMass<M> {
    type Params = M::Params;
    type Stats = ();

    fn name(&self) -> &'static str {
        self.inner.name()
    }

    fn initial_state(&self) -> InitialState {
        self.inner.initial_state()
    }

    fn prior(&self) {}

    fn transition_mean(&self, x_prev: f64, t: usize, p: &M::Params) -> f64 {
        self.inner.transition_mean(x_prev, t, p)
    }

    fn transition_var(&self, p: &M::Params) -> f64 {
        self.inner.transition_var(p)
    }

    fn sample_transition(&self, x_prev: f64, t: usize, p: &M::Params, rng: &mut Rng) -> f64 {
        self.inner.sample_transition(x_prev, t, p, rng)
    }

    fn transition_logpdf(&self, x: f64, x_prev: f64, t: usize, p: &M::Params) -> f64 {
        self.inner.transition_logpdf(x, x_prev, t, p)
    }

    fn observation_logpdf(&self, y: f64, x: f64, p: &M::Params) -> f64 {
        self.inner.observation_logpdf(y, x, p)
    }

    fn sample_observation(&self, x: f64, p: &M::Params, rng: &mut Rng) -> f64 {
        self.inner.sample_observation(x, p, rng)
    }

    fn check_observation(&self, y: f64) -> Result<()> {
        self.inner.check_observation(y)
    }

    fn update_stats(&self, _s: &(), _x_prev: f64, _x: f64, _y: f64, _t: usize) {}

    fn batch_posterior(&self, states: &[f64], ys: &[f64]) -> Result<()> {
        super::check_path(states, ys)
    }

    fn sample_params(&self, _s: &(), _rng: &mut Rng) -> M::Params {
        self.params
    }

    fn stats_values(&self, _s: &()) -> Vec<(&'static str, f64)> {
        Vec::new()
    }

    fn stats_valid(&self, _s: &()) -> bool {
        true
    }

    fn linear_transition(&self, p: &M::Params, t: usize) -> Option<LinearTransition> {
        self.inner.linear_transition(p, t)
    }

    fn linear_observation(&self, p: &M::Params) -> Option<LinearObservation> {
        self.inner.linear_observation(p)
    }

    fn crude_states(&self, ys: &[f64]) -> Vec<f64> {
        self.inner.crude_states(ys)
    }

    fn generating_params(&self) -> M::Params {
        self.params
    }

    fn set_hyper(&mut self, key: &str, _values: &[f64]) -> Result<()> {
        Err(Error::Parse(format!("point-mass prior has no hyperparameter `{key}`")))
    }
}
