use super::{provenance, JointGaussianApprox, Method, SmoothingDraws};
use crate::error::{Error, Result};
use crate::filters::{sample_index, FilterHistory};
use crate::model::StateSpaceModel;
use crate::parallel;
use crate::rng::{domain, Rng, Seed};
use crate::stats;

/// Which backward resampling weights to use.
#[derive(Debug, Clone, Copy)]
pub enum BackwardKernel<'a> {
    /// `w_t^j p(x_{t+1} | x_t^j, theta)`.
    Transition,
    /// Transition weights times the ratio of the conditional to the marginal
    /// Gaussian approximation of the filtered state density.
    Adjusted(&'a JointGaussianApprox),
}

/// Unnormalized log backward weights for the candidates of cloud index `k`
/// (time `t = k + 1`) given the already-sampled `x_{t+1}` and `theta`.
///
/// `log_w_filter` are the normalized log filter weights of that cloud. Terms
/// constant in `j` are dropped.
#[allow(clippy::too_many_arguments)]
pub fn backward_log_weights<M: StateSpaceModel>(
    model: &M,
    history: &FilterHistory<M::Params, M::Stats>,
    log_w_filter: &[f64],
    kernel: BackwardKernel<'_>,
    k: usize,
    x_next: f64,
    theta: &M::Params,
    out: &mut Vec<f64>,
) {
    let cloud = &history.clouds[k];
    let t_next = cloud.t + 1;
    let inv_var = 1.0 / model.transition_var(theta);
    out.clear();
    out.extend(cloud.states.iter().zip(log_w_filter).map(|(&x, &lw)| {
        let d = x_next - model.transition_mean(x, t_next, theta);
        let l = lw - 0.5 * d * d * inv_var;
        if l.is_nan() { f64::NEG_INFINITY } else { l }
    }));
    if let BackwardKernel::Adjusted(approx) = kernel {
        let cm = approx.conditional_mean(k, theta);
        let (m, v) = approx.marginal(k);
        let (a, b) = (0.5 / approx.conditional_var(k), 0.5 / v);
        for (o, &x) in out.iter_mut().zip(&cloud.states) {
            let (dc, dm) = (x - cm, x - m);
            *o += b * dm * dm - a * dc * dc;
        }
    }
}

/// Normalized log filter weights and their running sums, per cloud.
struct Tables {
    log_w: Vec<Vec<f64>>,
    cdf: Vec<Vec<f64>>,
}

impl Tables {
    fn new<P: Copy, S: Copy>(history: &FilterHistory<P, S>) -> Self {
        let log_w: Vec<Vec<f64>> = history.clouds.iter().map(|c| c.log_normalized()).collect();
        let cdf = log_w
            .iter()
            .map(|lw| {
                let mut acc = 0.0;
                lw.iter()
                    .map(|l| {
                        acc += l.exp();
                        acc
                    })
                    .collect()
            })
            .collect();
        Tables { log_w, cdf }
    }

    /// Index drawn from the filter weights of cloud `k`.
    fn pick(&self, k: usize, rng: &mut Rng) -> Option<usize> {
        let cdf = &self.cdf[k];
        let total = *cdf.last()?;
        if !(total > 0.0) {
            return None;
        }
        let u = stats::uniform(rng) * total;
        Some(cdf.partition_point(|&c| c <= u).min(cdf.len() - 1))
    }
}

/// Proposals tried before falling back to the exhaustive O(N) draw; a
/// proposal costs about as much as eight terms of the exhaustive sum.
fn rejection_tries(n: usize) -> usize {
    (n / 8).max(32)
}

/// Upper bound of the adjustment `b (x - m)^2 - a (x - c)^2`, if it has one.
fn adjustment_bound(a: f64, b: f64, c: f64, m: f64) -> Option<f64> {
    if a - b > 1e-12 * a {
        Some(a * b * (c - m).powi(2) / (a - b))
    } else if c == m {
        Some(0.0)
    } else {
        None
    }
}

/// Draws the index of `x_t` given `x_{t+1}` and `theta`.
///
/// Candidates are proposed from the filter weights and accepted with the
/// transition density (times the adjustment) relative to its maximum; after
/// [`rejection_tries`] rejections the full weight vector is computed. Both
/// routes sample the same distribution.
#[allow(clippy::too_many_arguments)]
fn backward_index<M: StateSpaceModel>(
    model: &M,
    history: &FilterHistory<M::Params, M::Stats>,
    tables: &Tables,
    kernel: BackwardKernel<'_>,
    k: usize,
    x_next: f64,
    theta: &M::Params,
    rng: &mut Rng,
) -> Result<usize> {
    let cloud = &history.clouds[k];
    let cdf = &tables.cdf[k];
    let total = cdf.last().copied().unwrap_or(0.0);
    let inv_var = 1.0 / model.transition_var(theta);
    let adj = match kernel {
        BackwardKernel::Transition => Some(None),
        BackwardKernel::Adjusted(approx) => {
            let cm = approx.conditional_mean(k, theta);
            let (m, v) = approx.marginal(k);
            let (a, b) = (0.5 / approx.conditional_var(k), 0.5 / v);
            adjustment_bound(a, b, cm, m).map(|bound| Some((a, b, cm, m, bound)))
        }
    };
    if let Some(adj) = adj.filter(|_| total > 0.0 && inv_var.is_finite()) {
        let t_next = cloud.t + 1;
        for _ in 0..rejection_tries(cdf.len()) {
            let j = tables.pick(k, rng).expect("positive total");
            let x = cloud.states[j];
            let d = x_next - model.transition_mean(x, t_next, theta);
            let mut l = -0.5 * d * d * inv_var;
            if let Some((a, b, cm, m, bound)) = adj {
                l += b * (x - m).powi(2) - a * (x - cm).powi(2) - bound;
            }
            if stats::uniform(rng) < l.exp() {
                return Ok(j);
            }
        }
    }
    let (mut weights, mut scratch) = (Vec::with_capacity(cdf.len()), Vec::with_capacity(cdf.len()));
    backward_log_weights(model, history, &tables.log_w[k], kernel, k, x_next, theta, &mut weights);
    sample_index(&weights, &mut scratch, rng).ok_or(Error::DegenerateTransition { t: k + 1 })
}

/// Backward simulation from `x_T = x_last` with fixed `theta`.
fn backward_path<M: StateSpaceModel>(
    model: &M,
    history: &FilterHistory<M::Params, M::Stats>,
    tables: &Tables,
    kernel: BackwardKernel<'_>,
    x_last: f64,
    theta: &M::Params,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    let t_len = history.clouds.len();
    let mut path = vec![0.0; t_len];
    path[t_len - 1] = x_last;
    for k in (0..t_len - 1).rev() {
        let j = backward_index(model, history, tables, kernel, k, path[k + 1], theta, rng)?;
        path[k] = history.clouds[k].states[j];
    }
    Ok(path)
}

/// One draw from `p(x^T | y^T, theta)` by forward filtering, backward
/// simulation over a history filtered with `theta`.
pub fn godsill_backward<M: StateSpaceModel>(
    model: &M,
    theta: &M::Params,
    history: &FilterHistory<M::Params, M::Stats>,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    history.require_complete()?;
    let tables = Tables::new(history);
    let last = tables.log_w.len() - 1;
    let i = tables.pick(last, rng).ok_or(Error::DegenerateWeights { t: last + 1, theta: None })?;
    let x_last = history.clouds[last].states[i];
    backward_path(model, history, &tables, BackwardKernel::Transition, x_last, theta, rng)
}

fn joint_backward<M: StateSpaceModel>(
    model: &M,
    history: &FilterHistory<M::Params, M::Stats>,
    kernel: BackwardKernel<'_>,
    draws: usize,
    method: Method,
    seed: Seed,
) -> Result<SmoothingDraws<M::Params>> {
    history.require_complete()?;
    let tables = Tables::new(history);
    let log_w = &tables.log_w;
    let last = log_w.len() - 1;
    let t_len = log_w.len();
    // Time-major sweep: every draw visits cloud k before any moves to k - 1,
    // which keeps one cloud's tables in cache. Each draw owns its stream.
    let mut walkers: Vec<Walker<M::Params>> = parallel::map_indexed(draws, |m| {
        let mut rng = seed.stream(domain::BACKWARD, m as u64, 0);
        let mut path = vec![0.0; t_len];
        match tables.pick(last, &mut rng) {
            Some(i) => {
                path[last] = history.clouds[last].states[i];
                Walker { rng, theta: history.param(last, i), path, error: None }
            }
            None => Walker {
                rng,
                theta: history.param(last, 0),
                path,
                error: Some(Error::DegenerateWeights { t: last + 1, theta: None }),
            },
        }
    });
    for k in (0..last).rev() {
        parallel::for_each_mut(&mut walkers, |w| {
            if w.error.is_some() {
                return;
            }
            match backward_index(model, history, &tables, kernel, k, w.path[k + 1], &w.theta, &mut w.rng) {
                Ok(j) => w.path[k] = history.clouds[k].states[j],
                Err(e) => w.error = Some(e),
            }
        });
    }
    let mut out = SmoothingDraws::new(t_len, method, provenance(seed, history.n, 0, 0));
    for w in walkers {
        if let Some(e) = w.error {
            return Err(e);
        }
        out.push(&w.path, w.theta);
    }
    Ok(out)
}

struct Walker<P> {
    rng: Rng,
    theta: P,
    path: Vec<f64>,
    error: Option<Error>,
}

/// Particle learning and smoothing: select `(x_T, theta)` from the final
/// cloud, then resample each earlier cloud with weights proportional to
/// `p(x_{t+1} | x_t^j, theta)`.
pub fn pls_smooth<M: StateSpaceModel>(
    model: &M,
    history: &FilterHistory<M::Params, M::Stats>,
    draws: usize,
    seed: Seed,
) -> Result<SmoothingDraws<M::Params>> {
    joint_backward(model, history, BackwardKernel::Transition, draws, Method::Pls, seed)
}

/// Particle learning and smoothing with weights adjusted by the ratio
/// `N(x_t^j; mu^{x|theta}, Sigma^{x|theta}) / N(x_t^j; mu^x, Sigma^x)`.
pub fn plsa_smooth<M: StateSpaceModel>(
    model: &M,
    history: &FilterHistory<M::Params, M::Stats>,
    approx: &JointGaussianApprox,
    draws: usize,
    seed: Seed,
) -> Result<SmoothingDraws<M::Params>> {
    if approx.len() != history.clouds.len() {
        return Err(Error::Shape(format!(
            "approximation covers {} steps, history has {}",
            approx.len(),
            history.clouds.len()
        )));
    }
    joint_backward(model, history, BackwardKernel::Adjusted(approx), draws, Method::PlsAdjusted, seed)
}
