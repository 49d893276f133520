use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::filters::FilterHistory;
use crate::model::ParamVector;

/// Per-time multivariate normal fit to the filtered cloud of
/// `(x_t, g(theta))`, where `g` maps each parameter to the real line (log
/// for positive parameters).
///
/// Coordinate 0 is the state; coordinates `1..=P` are the transformed
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct JointGaussianApprox {
    pub means: Vec<DVector<f64>>,
    /// Jittered covariances.
    pub covs: Vec<DMatrix<f64>>,
    /// `(Sigma^theta)^-1 Sigma^{theta x}` per time.
    gains: Vec<DVector<f64>>,
    /// `Sigma^x - Sigma^{x theta} (Sigma^theta)^-1 Sigma^{theta x}` per time.
    cond_vars: Vec<f64>,
}

impl JointGaussianApprox {
    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    /// Marginal mean and variance of the state at cloud index `k`.
    pub fn marginal(&self, k: usize) -> (f64, f64) {
        (self.means[k][0], self.covs[k][(0, 0)])
    }

    /// Conditional mean of the state given `theta` at cloud index `k`.
    pub fn conditional_mean<P: ParamVector>(&self, k: usize, theta: &P) -> f64 {
        let mean = &self.means[k];
        let gain = &self.gains[k];
        let mut m = mean[0];
        for c in 0..P::DIM {
            m += gain[c] * (theta.transformed(c) - mean[c + 1]);
        }
        m
    }

    /// Conditional state variance at cloud index `k`; it does not depend on theta.
    pub fn conditional_var(&self, k: usize) -> f64 {
        self.cond_vars[k]
    }

    /// Correlation between the state and transformed parameter `c`.
    pub fn correlation(&self, k: usize, c: usize) -> f64 {
        let s = &self.covs[k];
        s[(0, c + 1)] / (s[(0, 0)] * s[(c + 1, c + 1)]).sqrt()
    }

    /// `log N(x; mu^{x|theta}, Sigma^{x|theta}) - log N(x; mu^x, Sigma^x)`.
    #[inline]
    pub fn log_ratio(&self, k: usize, x: f64, cond_mean: f64) -> f64 {
        let (m, v) = self.marginal(k);
        let cv = self.cond_vars[k];
        let dc = x - cond_mean;
        let dm = x - m;
        -0.5 * (cv / v).ln() - 0.5 * dc * dc / cv + 0.5 * dm * dm / v
    }
}

/// Relative jitter added to the covariance diagonal: `1e-9 * trace / dim`.
pub const JITTER: f64 = 1e-9;

/// Fits the joint Gaussian approximation to every cloud of `history`.
pub fn fit_joint_gaussian<P: ParamVector, S: Copy>(history: &FilterHistory<P, S>) -> Result<JointGaussianApprox> {
    history.require_complete()?;
    let dim = 1 + P::DIM;
    if history.n < dim + 2 {
        return Err(Error::InsufficientSamples { needed: dim + 2, got: history.n });
    }
    let mut out = JointGaussianApprox {
        means: Vec::with_capacity(history.len()),
        covs: Vec::with_capacity(history.len()),
        gains: Vec::with_capacity(history.len()),
        cond_vars: Vec::with_capacity(history.len()),
    };
    let mut row = vec![0.0; dim];
    for (k, cloud) in history.clouds.iter().enumerate() {
        let w = cloud.weights();
        let fill = |i: usize, row: &mut [f64]| {
            row[0] = cloud.states[i];
            let p = history.param(k, i);
            for c in 0..P::DIM {
                row[c + 1] = p.transformed(c);
            }
        };
        // Moments relative to particle 0 so constant coordinates have exactly
        // zero spread and zero cross-covariance.
        let mut shift = vec![0.0; dim];
        fill(0, &mut shift);
        let mut mean = DVector::<f64>::zeros(dim);
        for (i, &wi) in w.iter().enumerate() {
            fill(i, &mut row);
            for c in 0..dim {
                mean[c] += wi * (row[c] - shift[c]);
            }
        }
        let mut cov = DMatrix::<f64>::zeros(dim, dim);
        let mut d = DVector::<f64>::zeros(dim);
        for (i, &wi) in w.iter().enumerate() {
            if wi == 0.0 {
                continue;
            }
            fill(i, &mut row);
            for c in 0..dim {
                d[c] = row[c] - shift[c] - mean[c];
            }
            cov.syger(wi, &d, &d, 1.0);
        }
        cov.fill_upper_triangle_with_lower_triangle();
        for c in 0..dim {
            mean[c] += shift[c];
        }
        let jitter = JITTER * cov.trace() / dim as f64;
        for c in 0..dim {
            cov[(c, c)] += jitter;
        }

        let sigma_theta = cov.view((1, 1), (P::DIM, P::DIM)).into_owned();
        let sigma_theta_x = cov.view((1, 0), (P::DIM, 1)).column(0).into_owned();
        let gain = if sigma_theta_x.iter().all(|&v| v == 0.0) {
            DVector::zeros(P::DIM)
        } else {
            let chol = sigma_theta.cholesky().ok_or_else(|| Error::ApproximationDegeneracy {
                t: cloud.t,
                what: "parameter covariance is not positive definite".into(),
            })?;
            chol.solve(&sigma_theta_x)
        };
        let cond_var = cov[(0, 0)] - sigma_theta_x.dot(&gain);
        if !(cond_var > 0.0) || !cond_var.is_finite() {
            return Err(Error::ApproximationDegeneracy {
                t: cloud.t,
                what: format!("conditional state variance {cond_var}"),
            });
        }
        out.means.push(mean);
        out.covs.push(cov);
        out.gains.push(gain);
        out.cond_vars.push(cond_var);
    }
    Ok(out)
}
