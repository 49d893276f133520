//! State-space models with conjugate parameter learning.
//!
//! All models have a scalar latent state with additive Gaussian evolution
//! noise, `x_t = mean(x_{t-1}, t, theta) + w_t`, `w_t ~ N(0, var(theta))`, and
//! a model-specific observation law. Parameters carry conjugate priors whose
//! hyperparameters are updated recursively along a state path.
//!
//! Normal-inverse-gamma blocks `NIG(b, B, n, d)` use the precision-scale
//! convention throughout: `variance ~ IG(n, d)` (shape `n`, scale `d`) and
//! `coefficients | variance ~ N(b, variance * B^-1)`.

mod ar1;
mod chaotic;
mod growth;
mod nig;
mod point_mass;
mod sv;

pub use ar1::{Ar1, Ar1Params, Ar1Stats};
pub use chaotic::{Chaotic, ChaoticParams, ChaoticStats};
pub use growth::{Growth, GrowthParams, GrowthStats};
pub use nig::Nig;
pub use point_mass::PointMass;
pub use sv::{StochasticVolatility, SvParams, SvStats};

use std::fmt::Debug;

use crate::error::{Error, Result};
use crate::rng::{domain, Rng, Seed};
use crate::stats;

/// Support of one scalar parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Real,
    Positive,
    Interval(f64, f64),
}

impl Support {
    /// Membership test. Simulation accepts zero variances (`allow_boundary`),
    /// posterior draws never produce them.
    pub fn contains(self, v: f64, allow_boundary: bool) -> bool {
        if !v.is_finite() {
            return false;
        }
        match self {
            Support::Real => true,
            Support::Positive => v > 0.0 || (allow_boundary && v == 0.0),
            Support::Interval(lo, hi) => {
                (v > lo && v < hi) || (allow_boundary && (v == lo || v == hi))
            }
        }
    }

    /// Map to the real line: log for positive, logit for intervals.
    pub fn forward(self, v: f64) -> f64 {
        match self {
            Support::Real => v,
            Support::Positive => v.ln(),
            Support::Interval(lo, hi) => {
                let u = (v - lo) / (hi - lo);
                (u / (1.0 - u)).ln()
            }
        }
    }

    pub fn inverse(self, u: f64) -> f64 {
        match self {
            Support::Real => u,
            Support::Positive => u.exp(),
            Support::Interval(lo, hi) => lo + (hi - lo) / (1.0 + (-u).exp()),
        }
    }
}

/// A fixed-length named parameter vector.
pub trait ParamVector: Copy + Debug + PartialEq + Send + Sync + 'static {
    const DIM: usize;

    fn names() -> &'static [&'static str];
    fn supports() -> &'static [Support];
    fn get(&self, k: usize) -> f64;
    fn from_values(v: &[f64]) -> Self;

    fn values(&self) -> Vec<f64> {
        (0..Self::DIM).map(|k| self.get(k)).collect()
    }

    /// Component `k` on the unconstrained scale.
    fn transformed(&self, k: usize) -> f64 {
        Self::supports()[k].forward(self.get(k))
    }

    fn from_transformed(u: &[f64]) -> Self {
        let s = Self::supports();
        let v: Vec<f64> = u.iter().zip(s).map(|(&x, s)| s.inverse(x)).collect();
        Self::from_values(&v)
    }

    /// Checks every component against its support, naming the first violation.
    fn check_support(&self, allow_boundary: bool) -> Result<()> {
        for (k, (name, s)) in Self::names().iter().zip(Self::supports()).enumerate() {
            let v = self.get(k);
            if !s.contains(v, allow_boundary) {
                return Err(Error::domain(*name, format!("value {v} outside support {s:?}")));
            }
        }
        Ok(())
    }
}

macro_rules! param_vector {
    ($(#[$meta:meta])* $name:ident { $($field:ident : $support:expr),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq)]
        pub struct $name {
            $(pub $field: f64),+
        }

        impl $crate::model::ParamVector for $name {
            const DIM: usize = [$(stringify!($field)),+].len();

            fn names() -> &'static [&'static str] {
                &[$(stringify!($field)),+]
            }

            fn supports() -> &'static [$crate::model::Support] {
                use $crate::model::Support::*;
                const S: &[$crate::model::Support] = &[$($support),+];
                S
            }

            fn get(&self, k: usize) -> f64 {
                [$(self.$field),+][k]
            }

            fn from_values(v: &[f64]) -> Self {
                let mut it = v.iter().copied();
                $name { $($field: it.next().expect("parameter vector too short")),+ }
            }
        }
    };
}
pub(crate) use param_vector;

/// Distribution of the initial state `x_0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    /// Known and fixed.
    Fixed(f64),
    /// `x_0 ~ N(mean, var)`, independent of the parameters.
    Diffuse { mean: f64, var: f64 },
}

impl InitialState {
    pub fn sample(self, rng: &mut Rng) -> f64 {
        match self {
            InitialState::Fixed(x) => x,
            InitialState::Diffuse { mean, var } => mean + var.sqrt() * stats::std_normal(rng),
        }
    }

    pub fn mean(self) -> f64 {
        match self {
            InitialState::Fixed(x) => x,
            InitialState::Diffuse { mean, .. } => mean,
        }
    }

    pub fn var(self) -> f64 {
        match self {
            InitialState::Fixed(_) => 0.0,
            InitialState::Diffuse { var, .. } => var,
        }
    }
}

/// `x_t = intercept + g x_{t-1} + N(0, w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearTransition {
    pub intercept: f64,
    pub g: f64,
    pub w: f64,
}

/// `y_t = f x_t + N(0, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearObservation {
    pub f: f64,
    pub v: f64,
}

/// A scalar-state model with conjugate sufficient statistics.
pub trait StateSpaceModel: Send + Sync {
    type Params: ParamVector;
    type Stats: Copy + Debug + PartialEq + Send + Sync;

    fn name(&self) -> &'static str;
    fn initial_state(&self) -> InitialState;

    /// Hyperparameters of the prior, i.e. the time-0 sufficient statistics.
    fn prior(&self) -> Self::Stats;

    /// Conditional mean of `x_t` given `x_{t-1}`; `t` is 1-based.
    fn transition_mean(&self, x_prev: f64, t: usize, p: &Self::Params) -> f64;
    fn transition_var(&self, p: &Self::Params) -> f64;

    fn sample_transition(&self, x_prev: f64, t: usize, p: &Self::Params, rng: &mut Rng) -> f64 {
        self.transition_mean(x_prev, t, p) + self.transition_var(p).sqrt() * stats::std_normal(rng)
    }

    fn transition_logpdf(&self, x: f64, x_prev: f64, t: usize, p: &Self::Params) -> f64 {
        stats::normal_logpdf(x, self.transition_mean(x_prev, t, p), self.transition_var(p))
    }

    /// Observation log-density. Inputs are assumed to have passed
    /// [`StateSpaceModel::check_observation`].
    fn observation_logpdf(&self, y: f64, x: f64, p: &Self::Params) -> f64;
    fn sample_observation(&self, x: f64, p: &Self::Params, rng: &mut Rng) -> f64;

    fn check_observation(&self, y: f64) -> Result<()> {
        if y.is_finite() {
            Ok(())
        } else {
            Err(Error::domain("y", format!("non-finite observation {y}")))
        }
    }

    /// One step of the sufficient-statistic recursion `s_t = S(x_t, s_{t-1}, y_t)`.
    fn update_stats(&self, s: &Self::Stats, x_prev: f64, x: f64, y: f64, t: usize) -> Self::Stats;

    /// Hyperparameters of `p(theta | x^T, y^T)` computed in one pass over the
    /// whole path. `states` includes `x_0`, so `states.len() == ys.len() + 1`.
    fn batch_posterior(&self, states: &[f64], ys: &[f64]) -> Result<Self::Stats>;

    /// Exact draw from the conjugate posterior `p(theta | s)`.
    fn sample_params(&self, s: &Self::Stats, rng: &mut Rng) -> Self::Params;

    /// Flattened hyperparameters with their names.
    fn stats_values(&self, s: &Self::Stats) -> Vec<(&'static str, f64)>;

    /// Positivity / positive-definiteness of scale hyperparameters.
    fn stats_valid(&self, s: &Self::Stats) -> bool;

    fn linear_transition(&self, _p: &Self::Params, _t: usize) -> Option<LinearTransition> {
        None
    }

    fn linear_observation(&self, _p: &Self::Params) -> Option<LinearObservation> {
        None
    }

    /// Rough state path from the data alone, used to start MCMC chains.
    fn crude_states(&self, ys: &[f64]) -> Vec<f64>;

    /// Benchmark generating parameters.
    fn generating_params(&self) -> Self::Params;

    /// Override a prior hyperparameter by name.
    fn set_hyper(&mut self, key: &str, values: &[f64]) -> Result<()>;
}

/// Checked single step of the sufficient-statistic recursion.
pub fn update_suffstats<M: StateSpaceModel>(
    model: &M,
    s_prev: &M::Stats,
    x_prev: f64,
    x: f64,
    y: f64,
    t: usize,
) -> Result<M::Stats> {
    let s = model.update_stats(s_prev, x_prev, x, y, t);
    if model.stats_valid(&s) {
        Ok(s)
    } else {
        Err(Error::Numerical {
            t,
            what: format!("sufficient statistics lost positive definiteness: {s:?}"),
        })
    }
}

/// Iterates the recursion along a path (`states` includes `x_0`).
pub fn iterate_suffstats<M: StateSpaceModel>(model: &M, states: &[f64], ys: &[f64]) -> Result<M::Stats> {
    check_path(states, ys)?;
    let mut s = model.prior();
    for t in 1..states.len() {
        s = update_suffstats(model, &s, states[t - 1], states[t], ys[t - 1], t)?;
    }
    Ok(s)
}

pub(crate) fn check_path(states: &[f64], ys: &[f64]) -> Result<()> {
    if states.len() != ys.len() + 1 {
        return Err(Error::Shape(format!(
            "state path (incl. x0) has length {} but there are {} observations",
            states.len(),
            ys.len()
        )));
    }
    Ok(())
}

pub fn check_observations<M: StateSpaceModel>(model: &M, ys: &[f64]) -> Result<()> {
    ys.iter().try_for_each(|&y| model.check_observation(y))
}

/// Checked transition log-density.
pub fn transition_logpdf<M: StateSpaceModel>(model: &M, x: f64, x_prev: f64, t: usize, p: &M::Params) -> Result<f64> {
    p.check_support(true)?;
    Ok(model.transition_logpdf(x, x_prev, t, p))
}

/// Checked observation log-density.
pub fn observation_logpdf<M: StateSpaceModel>(model: &M, y: f64, x: f64, p: &M::Params) -> Result<f64> {
    p.check_support(true)?;
    model.check_observation(y)?;
    Ok(model.observation_logpdf(y, x, p))
}

/// A simulated data set.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x0: f64,
    /// `x_1..x_T`.
    pub states: Vec<f64>,
    /// `y_1..y_T`.
    pub observations: Vec<f64>,
}

impl Dataset {
    /// The state path including `x_0`.
    pub fn full_path(&self) -> Vec<f64> {
        std::iter::once(self.x0).chain(self.states.iter().copied()).collect()
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

/// Simulates `t_len` steps of the model from `x0`.
pub fn simulate<M: StateSpaceModel>(model: &M, params: &M::Params, t_len: usize, x0: f64, seed: Seed) -> Result<Dataset> {
    params.check_support(true)?;
    if t_len == 0 {
        return Err(Error::Shape("simulation length must be at least 1".into()));
    }
    let mut rng = seed.stream(domain::SIMULATE, 0, 0);
    let mut states = Vec::with_capacity(t_len);
    let mut observations = Vec::with_capacity(t_len);
    let mut x = x0;
    for t in 1..=t_len {
        x = model.sample_transition(x, t, params, &mut rng);
        states.push(x);
        observations.push(model.sample_observation(x, params, &mut rng));
    }
    Ok(Dataset { x0, states, observations })
}
