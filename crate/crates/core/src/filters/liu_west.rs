use nalgebra::{DMatrix, DVector};

use super::{resample, FilterHistory, FilterOptions, ParticleCloud};
use crate::error::{Error, Result};
use crate::model::{check_observations, ParamVector, StateSpaceModel};
use crate::parallel;
use crate::rng::{domain, Seed};
use crate::stats;

/// Square-root factor `L` with `L L' = cov` for a possibly singular PSD matrix.
pub(crate) fn psd_sqrt(cov: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(c) = cov.clone().cholesky() {
        return c.l();
    }
    let eig = cov.clone().symmetric_eigen();
    let sqrt_vals = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals)
}

/// Liu and West's auxiliary kernel filter.
///
/// Parameters are carried on their unconstrained scale (log for positive
/// parameters). At each step the kernel locations are shrunk towards the
/// weighted mean, `m_j = a theta_j + (1 - a) theta_bar`, and fresh values are
/// drawn from `N(m_k, h^2 V)` with `h^2 = 1 - a^2`, which leaves the
/// parameter-marginal mean and covariance unchanged.
pub fn liu_west_filter<M: StateSpaceModel>(
    model: &M,
    ys: &[f64],
    n: usize,
    a: f64,
    opts: &FilterOptions,
    seed: Seed,
) -> Result<FilterHistory<M::Params, M::Stats>> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::domain("a", format!("smoothing parameter must lie in (0, 1], got {a}")));
    }
    if n == 0 || ys.is_empty() {
        return Err(Error::Shape("need at least one particle and one observation".into()));
    }
    check_observations(model, ys)?;
    let dim = M::Params::DIM;
    let h2 = 1.0 - a * a;
    let ln_n = (n as f64).ln();
    let thinning = opts.thinning.max(1);
    let init = model.initial_state();
    let prior = model.prior();

    let start: Vec<(f64, M::Params)> = parallel::map_indexed(n, |i| {
        let mut rng = seed.stream(domain::INIT, 0, i as u64);
        let x = init.sample(&mut rng);
        (x, model.sample_params(&prior, &mut rng))
    });
    let x0: Vec<f64> = start.iter().map(|s| s.0).collect();
    let mut prev_x = x0.clone();
    let mut prev_u: Vec<Vec<f64>> = start
        .iter()
        .map(|s| (0..dim).map(|k| s.1.transformed(k)).collect())
        .collect();
    let mut prev_logw = vec![-ln_n; n];

    let mut clouds = Vec::new();
    let mut log_increments = Vec::with_capacity(ys.len());

    for t in 1..=ys.len() {
        let y = ys[t - 1];
        let w = stats::normalized_weights(&prev_logw).ok_or(Error::DegenerateWeights { t, theta: None })?;

        // Weighted mean and covariance, computed relative to particle 0 so a
        // constant coordinate yields exactly zero spread.
        let shift = prev_u[0].clone();
        let mut mean = DVector::<f64>::zeros(dim);
        for (u, &wi) in prev_u.iter().zip(&w) {
            for k in 0..dim {
                mean[k] += wi * (u[k] - shift[k]);
            }
        }
        let mut cov = DMatrix::<f64>::zeros(dim, dim);
        for (u, &wi) in prev_u.iter().zip(&w) {
            let d = DVector::from_fn(dim, |k, _| u[k] - shift[k] - mean[k]);
            cov += wi * &d * d.transpose();
        }
        let kernel_sqrt = psd_sqrt(&(cov * h2));

        // Shrunk kernel locations and first-stage look-ahead weights.
        let locs: Vec<Vec<f64>> = prev_u
            .iter()
            .map(|u| (0..dim).map(|k| shift[k] + mean[k] + a * (u[k] - shift[k] - mean[k])).collect())
            .collect();
        let first_stage: Vec<f64> = parallel::map_indexed(n, |j| {
            let p = M::Params::from_transformed(&locs[j]);
            let mu = model.transition_mean(prev_x[j], t, &p);
            let g = model.observation_logpdf(y, mu, &p);
            if g.is_nan() { f64::NEG_INFINITY } else { g }
        });
        let look_ahead: Vec<f64> = prev_logw.iter().zip(&first_stage).map(|(l, g)| l + g).collect();
        let look_norm = stats::log_sum_exp(&look_ahead);
        if !look_norm.is_finite() {
            return Err(Error::DegenerateWeights { t, theta: None });
        }
        let mut rng = seed.stream(domain::RESAMPLE, t as u64, 0);
        let idx = resample(&look_ahead, opts.scheme, &mut rng)
            .map_err(|_| Error::DegenerateWeights { t, theta: None })?;

        let moved: Vec<(f64, Vec<f64>, f64)> = parallel::map_indexed(n, |i| {
            let k = idx[i];
            let mut krng = seed.stream(domain::KERNEL, t as u64, i as u64);
            let z = DVector::from_fn(dim, |_, _| stats::std_normal(&mut krng));
            let mut rng = seed.stream(domain::PROPAGATE, t as u64, i as u64);
            let jitter = &kernel_sqrt * z;
            let u: Vec<f64> = (0..dim).map(|c| locs[k][c] + jitter[c]).collect();
            let p = M::Params::from_transformed(&u);
            let x = model.sample_transition(prev_x[k], t, &p, &mut rng);
            let lw = model.observation_logpdf(y, x, &p) - first_stage[k];
            (x, u, if lw.is_nan() { f64::NEG_INFINITY } else { lw })
        });

        // Scale so that log_sum_exp(log_weights) estimates log p(y_t | y^{t-1}).
        let log_weights: Vec<f64> = moved.iter().map(|m| m.2 + look_norm - ln_n).collect();
        let inc = stats::log_sum_exp(&log_weights);
        if !inc.is_finite() {
            return Err(Error::DegenerateWeights { t, theta: None });
        }
        log_increments.push(inc);

        let states: Vec<f64> = moved.iter().map(|m| m.0).collect();
        let params: Vec<M::Params> = moved.iter().map(|m| M::Params::from_transformed(&m.1)).collect();
        if t % thinning == 0 || t == ys.len() {
            clouds.push(ParticleCloud {
                t,
                states: states.clone(),
                params,
                suffstats: None,
                log_weights: log_weights.clone(),
                ancestors: idx.iter().map(|&i| i as u32).collect(),
            });
        }
        prev_x = states;
        prev_u = moved.into_iter().map(|m| m.1).collect();
        prev_logw = log_weights.iter().map(|l| l - inc).collect();
    }

    Ok(FilterHistory {
        n,
        x0,
        clouds,
        log_increments,
        final_suffstats: None,
        fixed_params: None,
        seed,
        thinning,
    })
}
