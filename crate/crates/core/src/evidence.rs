//! Marginal likelihood estimates.

use crate::error::{Error, Result};
use crate::filters::FilterHistory;
use crate::mcmc::McmcChain;
use crate::model::{ParamVector, StateSpaceModel};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvidenceMethod {
    Smc,
    HarmonicMean,
}

impl EvidenceMethod {
    pub fn tag(self) -> &'static str {
        match self {
            EvidenceMethod::Smc => "smc",
            EvidenceMethod::HarmonicMean => "harmonic_mean",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceEstimate {
    pub log_marginal: f64,
    pub method: EvidenceMethod,
    /// Particles, or kept MCMC draws.
    pub n: usize,
    /// `log p(y_t | y^{t-1})` per step; empty for the harmonic mean.
    pub increments: Vec<f64>,
}

/// `sum_t log sum_j w_t^j`, from the predictive log weights stored in each
/// cloud.
pub fn smc_log_marginal<P: Copy, S: Copy>(history: &FilterHistory<P, S>) -> Result<EvidenceEstimate> {
    if !history.is_complete() {
        return Err(Error::Unavailable(format!(
            "history thinned by {}; predictive weights are missing",
            history.thinning
        )));
    }
    let increments: Vec<f64> = history.clouds.iter().map(|c| stats::log_sum_exp(&c.log_weights)).collect();
    Ok(EvidenceEstimate {
        log_marginal: increments.iter().sum(),
        method: EvidenceMethod::Smc,
        n: history.n,
        increments,
    })
}

/// Complete-data log-likelihood `log p(y^T | x^T, theta)`.
pub fn complete_data_loglik<M: StateSpaceModel>(model: &M, path: &[f64], theta: &M::Params, ys: &[f64]) -> f64 {
    path.iter().zip(ys).map(|(&x, &y)| model.observation_logpdf(y, x, theta)).sum()
}

/// Harmonic mean of the complete-data likelihoods over the chain's draws.
pub fn harmonic_mean_log_marginal<M: StateSpaceModel>(
    chain: &McmcChain<M::Params>,
    model: &M,
    ys: &[f64],
) -> Result<EvidenceEstimate>
where
    M::Params: ParamVector,
{
    let draws = &chain.draws;
    if draws.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    if draws.t_len != ys.len() {
        return Err(Error::Shape(format!("chain has {} states for {} observations", draws.t_len, ys.len())));
    }
    Ok(harmonic_mean_from_logliks(
        &(0..draws.len())
            .map(|i| complete_data_loglik(model, draws.trajectory(i), &draws.params[i], ys))
            .collect::<Vec<_>>(),
    ))
}

/// `-log(mean_j exp(-l_j))`, computed in log space.
pub fn harmonic_mean_from_logliks(logliks: &[f64]) -> EvidenceEstimate {
    let neg: Vec<f64> = logliks.iter().map(|l| -l).collect();
    EvidenceEstimate {
        log_marginal: (logliks.len() as f64).ln() - stats::log_sum_exp(&neg),
        method: EvidenceMethod::HarmonicMean,
        n: logliks.len(),
        increments: Vec::new(),
    }
}
