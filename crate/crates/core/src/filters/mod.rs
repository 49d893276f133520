//! Forward filters and the particle histories they record.

mod kalman;
mod liu_west;
mod resample;
mod sir;

pub use kalman::{kalman_filter, rts_smoother, GaussianMoments, LinearSystem};
pub use liu_west::liu_west_filter;
pub use resample::{resample, resample_n, sample_index, ResamplingScheme};
pub use sir::{bootstrap_filter, storvik_filter};

use crate::error::{Error, Result};
use crate::model::StateSpaceModel;
use crate::rng::{domain, Seed};
use crate::stats;

/// The weighted particle approximation at one time step.
///
/// `log_weights` are unnormalized: they include the carried (normalized)
/// weight of each particle's parent plus the incremental observation
/// log-density, so `log_sum_exp(log_weights)` is the log predictive density
/// of `y_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud<P, S> {
    pub t: usize,
    pub states: Vec<f64>,
    /// Parameter value attached to each particle; empty under known parameters.
    pub params: Vec<P>,
    /// Sufficient statistics after this step; stored only on request.
    pub suffstats: Option<Vec<S>>,
    pub log_weights: Vec<f64>,
    /// Parent of each particle in the previous cloud (or in the initial draws at t=1).
    pub ancestors: Vec<u32>,
}

impl<P, S> ParticleCloud<P, S> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Normalized weights.
    pub fn weights(&self) -> Vec<f64> {
        stats::normalized_weights(&self.log_weights).unwrap_or_else(|| vec![0.0; self.len()])
    }

    /// Normalized log weights.
    pub fn log_normalized(&self) -> Vec<f64> {
        let z = stats::log_sum_exp(&self.log_weights);
        self.log_weights.iter().map(|l| l - z).collect()
    }

    pub fn ess(&self) -> f64 {
        stats::ess(&self.weights())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterOptions {
    pub scheme: ResamplingScheme,
    /// Resample only when ESS/N drops below this fraction; `None` resamples
    /// at every step.
    pub ess_threshold: Option<f64>,
    /// Keep per-particle sufficient statistics for every step.
    pub store_suffstats: bool,
    /// Keep every `thinning`-th cloud. Values above 1 make the history
    /// unusable for backward passes.
    pub thinning: usize,
}

impl Default for FilterOptions {
    fn default() -> Self {
        FilterOptions {
            scheme: ResamplingScheme::Systematic,
            ess_threshold: None,
            store_suffstats: false,
            thinning: 1,
        }
    }
}

/// Output of a forward filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterHistory<P, S> {
    pub n: usize,
    /// Initial particles `x_0`.
    pub x0: Vec<f64>,
    pub clouds: Vec<ParticleCloud<P, S>>,
    /// `log p(y_t | y^{t-1})` estimates, one per step.
    pub log_increments: Vec<f64>,
    /// Sufficient statistics aligned with the final cloud.
    pub final_suffstats: Option<Vec<S>>,
    /// The parameters the filter conditioned on, for known-parameter filters.
    pub fixed_params: Option<P>,
    pub seed: Seed,
    pub thinning: usize,
}

impl<P: Copy, S: Copy> FilterHistory<P, S> {
    pub fn len(&self) -> usize {
        self.log_increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_increments.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.thinning == 1 && self.clouds.len() == self.log_increments.len()
    }

    pub(crate) fn require_complete(&self) -> Result<()> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(Error::Unavailable(format!(
                "history thinned by {}; backward passes need every cloud",
                self.thinning
            )))
        }
    }

    pub fn final_cloud(&self) -> &ParticleCloud<P, S> {
        self.clouds.last().expect("history has at least one cloud")
    }

    /// Parameter attached to particle `i` of the cloud at index `k`.
    pub fn param(&self, k: usize, i: usize) -> P {
        match self.fixed_params {
            Some(p) => p,
            None => self.clouds[k].params[i],
        }
    }

    /// State path of particle `j` at 1-based time `t`, traced through its
    /// ancestors back to `x_0`. The result includes `x_0`.
    pub fn ancestral_path(&self, t: usize, j: usize) -> Result<Vec<f64>> {
        self.require_complete()?;
        let mut path = vec![0.0; t + 1];
        let mut idx = j;
        for s in (1..=t).rev() {
            let cloud = &self.clouds[s - 1];
            path[s] = cloud.states[idx];
            idx = cloud.ancestors[idx] as usize;
        }
        path[0] = self.x0[idx];
        Ok(path)
    }

    /// Per-step weighted mean and standard deviation of the states.
    pub fn filtered_moments(&self) -> Vec<(f64, f64)> {
        self.clouds
            .iter()
            .map(|c| {
                let (m, v) = stats::weighted_mean_var(&c.states, &c.weights());
                (m, v.sqrt())
            })
            .collect()
    }
}

/// `n_draws` draws from the parameter posterior at the final time.
///
/// Particles are selected by their final weights; when sufficient statistics
/// are available the parameter is drawn afresh from `p(theta | s_T)`,
/// otherwise the particle's own parameter is used.
pub fn final_param_draws<M: StateSpaceModel>(
    model: &M,
    history: &FilterHistory<M::Params, M::Stats>,
    n_draws: usize,
    seed: Seed,
) -> Result<Vec<M::Params>> {
    let last = history.final_cloud();
    let mut rng = seed.stream(domain::SELECT, 0, 0);
    let idx = resample_n(&last.log_weights, ResamplingScheme::Multinomial, n_draws, &mut rng)
        .map_err(|_| Error::DegenerateWeights { t: last.t, theta: None })?;
    Ok(idx
        .into_iter()
        .enumerate()
        .map(|(k, i)| match (&history.final_suffstats, history.fixed_params) {
            (_, Some(p)) => p,
            (Some(stats), None) => {
                let mut r = seed.stream(domain::SELECT, 1, k as u64);
                model.sample_params(&stats[i], &mut r)
            }
            (None, None) => last.params[i],
        })
        .collect())
}
