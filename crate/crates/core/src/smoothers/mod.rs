//! Backward-pass smoothers producing joint draws of state paths and parameters.

mod backward;
mod ffbs;
mod gaussian;
mod refilter;

pub use backward::{backward_log_weights, godsill_backward, pls_smooth, plsa_smooth, BackwardKernel};
pub use ffbs::ffbs_draw;
pub use gaussian::{fit_joint_gaussian, JointGaussianApprox};
pub use refilter::{ffbs_with_params, refilter_ffbs, refilter_smooth, refilter_with_params, ForwardLearner, RefilterOptions};

use crate::model::ParamVector;
use crate::rng::Seed;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Godsill,
    Pls,
    PlsAdjusted,
    Refilter,
    RefilterFfbs,
    GibbsFfbs,
    SingleSiteMh,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Godsill => "godsill",
            Method::Pls => "pls",
            Method::PlsAdjusted => "plsa",
            Method::Refilter => "refilter",
            Method::RefilterFfbs => "refilter_ffbs",
            Method::GibbsFfbs => "gibbs_ffbs",
            Method::SingleSiteMh => "single_site_mh",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Method> {
        [
            Method::Godsill,
            Method::Pls,
            Method::PlsAdjusted,
            Method::Refilter,
            Method::RefilterFfbs,
            Method::GibbsFfbs,
            Method::SingleSiteMh,
        ]
        .into_iter()
        .find(|m| m.tag() == tag)
    }
}

/// Budget and seed a set of draws was produced with.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Provenance {
    pub seed: u64,
    /// Forward filter particles.
    pub n: usize,
    /// Parameter draws used by refiltering (N0).
    pub param_draws: usize,
    /// Particles per conditional filter in refiltering (n0).
    pub state_particles: usize,
}

/// `M` joint draws `(x_1..x_T, theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingDraws<P> {
    pub t_len: usize,
    /// Row-major `M x T`.
    pub trajectories: Vec<f64>,
    pub params: Vec<P>,
    pub method: Method,
    pub provenance: Provenance,
}

/// Per-time marginal summary of a set of draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q500: f64,
    pub q975: f64,
}

impl Summary {
    pub fn of(values: &mut [f64]) -> Summary {
        let (mean, var) = stats::mean_var(values);
        values.sort_by(f64::total_cmp);
        Summary {
            mean,
            sd: var.sqrt(),
            q025: stats::quantile_sorted(values, 0.025),
            q500: stats::quantile_sorted(values, 0.5),
            q975: stats::quantile_sorted(values, 0.975),
        }
    }
}

impl<P: ParamVector> SmoothingDraws<P> {
    pub fn new(t_len: usize, method: Method, provenance: Provenance) -> Self {
        SmoothingDraws { t_len, trajectories: Vec::new(), params: Vec::new(), method, provenance }
    }

    pub fn push(&mut self, path: &[f64], param: P) {
        debug_assert_eq!(path.len(), self.t_len);
        self.trajectories.extend_from_slice(path);
        self.params.push(param);
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn trajectory(&self, i: usize) -> &[f64] {
        &self.trajectories[i * self.t_len..(i + 1) * self.t_len]
    }

    /// Draws of `x_t` for 0-based time index `k`.
    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.trajectories[i * self.t_len + k]).collect()
    }

    pub fn state_summary(&self) -> Vec<Summary> {
        (0..self.t_len).map(|k| Summary::of(&mut self.column(k))).collect()
    }

    pub fn state_means(&self) -> Vec<f64> {
        let m = self.len() as f64;
        let mut out = vec![0.0; self.t_len];
        for i in 0..self.len() {
            for (o, x) in out.iter_mut().zip(self.trajectory(i)) {
                *o += x / m;
            }
        }
        out
    }

    /// Summary of each parameter on its natural scale.
    pub fn param_summary(&self) -> Vec<(&'static str, Summary)> {
        P::names()
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let mut v: Vec<f64> = self.params.iter().map(|p| p.get(k)).collect();
                (*name, Summary::of(&mut v))
            })
            .collect()
    }
}

pub(crate) fn provenance(seed: Seed, n: usize, param_draws: usize, state_particles: usize) -> Provenance {
    Provenance { seed: seed.0, n, param_draws, state_particles }
}
