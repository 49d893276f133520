//! Reference posteriors by Markov chain Monte Carlo.

mod gibbs;
mod single_site;

pub use gibbs::gibbs_ffbs;
pub use single_site::{site_log_target, single_site_mh, InitStrategy, SingleSiteOptions};

use crate::model::{InitialState, StateSpaceModel};
use crate::rng::Rng;
use crate::smoothers::SmoothingDraws;
use crate::stats;

/// Post burn-in, thinned output of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct McmcChain<P> {
    pub draws: SmoothingDraws<P>,
    /// `(block, acceptance rate)` after burn-in.
    pub acceptance: Vec<(String, f64)>,
    pub burn_in: usize,
    pub iterations: usize,
    pub thin: usize,
    /// How the state path was initialized.
    pub init: String,
    pub warnings: Vec<String>,
}

impl<P> McmcChain<P> {
    /// Iteration number of kept draw `k`.
    pub fn iteration_of(&self, k: usize) -> usize {
        self.burn_in + (k + 1) * self.thin
    }
}

/// Common chain settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainOptions {
    pub iterations: usize,
    /// Defaults to 10% of `iterations`.
    pub burn_in: Option<usize>,
    pub thin: usize,
}

impl ChainOptions {
    pub fn new(iterations: usize) -> Self {
        ChainOptions { iterations, burn_in: None, thin: 1 }
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in.unwrap_or(self.iterations / 10).min(self.iterations)
    }

    pub(crate) fn keeps(&self, iter: usize) -> bool {
        let b = self.burn_in();
        iter >= b && (iter - b + 1).is_multiple_of(self.thin.max(1))
    }
}

/// Exact draw of `x_0 | x_1, theta` for a diffuse start with a linear-Gaussian
/// first transition. `None` when no closed form applies.
pub(crate) fn draw_x0<M: StateSpaceModel>(model: &M, x1: f64, theta: &M::Params, rng: &mut Rng) -> Option<f64> {
    match model.initial_state() {
        InitialState::Fixed(x) => Some(x),
        InitialState::Diffuse { mean, var } => {
            let lt = model.linear_transition(theta, 1)?;
            if !(lt.w > 0.0) {
                return Some(if lt.g != 0.0 { (x1 - lt.intercept) / lt.g } else { mean });
            }
            let prec = 1.0 / var + lt.g * lt.g / lt.w;
            let m = (mean / var + lt.g * (x1 - lt.intercept) / lt.w) / prec;
            Some(m + (1.0 / prec).sqrt() * stats::std_normal(rng))
        }
    }
}
