use super::{resample, FilterHistory, FilterOptions, ParticleCloud};
use crate::error::{Error, Result};
use crate::model::{check_observations, ParamVector, StateSpaceModel};
use crate::parallel;
use crate::rng::{domain, Rng, Seed};
use crate::stats;

/// Result of moving one particle forward.
struct Moved<P, S> {
    x: f64,
    param: P,
    stats: S,
    log_obs: f64,
}

/// Shared sampling-importance-resampling loop.
///
/// `step(t, x_prev, s_prev, rng)` moves one particle and returns its new
/// state, the parameter it used, its updated statistics and its observation
/// log-density.
#[allow(clippy::too_many_arguments)]
fn run_sir<P, S, F>(
    ys: &[f64],
    n: usize,
    opts: &FilterOptions,
    seed: Seed,
    x0: &(dyn Fn(&mut Rng) -> f64 + Sync),
    s0: S,
    keep_params: bool,
    step: F,
) -> Result<FilterHistory<P, S>>
where
    P: Copy + Send + Sync,
    S: Copy + Send + Sync,
    F: Fn(usize, f64, &S, &mut Rng) -> (f64, P, S, f64) + Sync,
{
    if n == 0 {
        return Err(Error::Shape("particle count must be at least 1".into()));
    }
    if ys.is_empty() {
        return Err(Error::Shape("need at least one observation".into()));
    }
    let thinning = opts.thinning.max(1);
    let ln_n = (n as f64).ln();

    let initial: Vec<f64> = parallel::map_indexed(n, |i| x0(&mut seed.stream(domain::INIT, 0, i as u64)));
    let mut prev_x = initial.clone();
    let mut prev_s = vec![s0; n];
    let mut prev_logw = vec![-ln_n; n];
    let mut ancestors: Vec<u32> = (0..n as u32).collect();

    let mut clouds = Vec::with_capacity(ys.len() / thinning + 1);
    let mut log_increments = Vec::with_capacity(ys.len());
    let mut final_suffstats = None;

    for t in 1..=ys.len() {
        let moved: Vec<Moved<P, S>> = parallel::map_indexed(n, |i| {
            let mut rng = seed.stream(domain::PROPAGATE, t as u64, i as u64);
            let (x, param, stats, log_obs) = step(t, prev_x[i], &prev_s[i], &mut rng);
            Moved { x, param, stats, log_obs }
        });

        let log_weights: Vec<f64> = moved
            .iter()
            .zip(&prev_logw)
            .map(|(m, lw)| if m.log_obs.is_nan() { f64::NEG_INFINITY } else { lw + m.log_obs })
            .collect();
        let inc = stats::log_sum_exp(&log_weights);
        if !inc.is_finite() {
            return Err(Error::DegenerateWeights { t, theta: None });
        }
        log_increments.push(inc);

        let states: Vec<f64> = moved.iter().map(|m| m.x).collect();
        let stats_now: Vec<S> = moved.iter().map(|m| m.stats).collect();
        let keep = t % thinning == 0 || t == ys.len();
        if keep {
            clouds.push(ParticleCloud {
                t,
                states: states.clone(),
                params: if keep_params { moved.iter().map(|m| m.param).collect() } else { Vec::new() },
                suffstats: opts.store_suffstats.then(|| stats_now.clone()),
                log_weights: log_weights.clone(),
                ancestors: ancestors.clone(),
            });
        }
        if t == ys.len() {
            final_suffstats = Some(stats_now);
            break;
        }

        let resample_now = match opts.ess_threshold {
            None => true,
            Some(frac) => {
                let w = stats::normalized_weights(&log_weights).expect("finite increment");
                stats::ess(&w) < frac * n as f64
            }
        };
        if resample_now {
            let mut rng = seed.stream(domain::RESAMPLE, t as u64, 0);
            let idx = resample(&log_weights, opts.scheme, &mut rng)
                .map_err(|_| Error::DegenerateWeights { t, theta: None })?;
            prev_x = idx.iter().map(|&i| states[i]).collect();
            prev_s = idx.iter().map(|&i| stats_now[i]).collect();
            prev_logw.iter_mut().for_each(|l| *l = -ln_n);
            ancestors = idx.iter().map(|&i| i as u32).collect();
        } else {
            prev_x = states;
            prev_s = stats_now;
            prev_logw = log_weights.iter().map(|l| l - inc).collect();
            ancestors = (0..n as u32).collect();
        }
    }

    Ok(FilterHistory {
        n,
        x0: initial,
        clouds,
        log_increments,
        final_suffstats,
        fixed_params: None,
        seed,
        thinning,
    })
}

/// Bootstrap SIR filter with known parameters.
///
/// Clouds carry no per-particle parameters; `fixed_params` records `params`.
pub fn bootstrap_filter<M: StateSpaceModel>(
    model: &M,
    params: &M::Params,
    ys: &[f64],
    n: usize,
    opts: &FilterOptions,
    seed: Seed,
) -> Result<FilterHistory<M::Params, M::Stats>> {
    params.check_support(false)?;
    check_observations(model, ys)?;
    let init = model.initial_state();
    let p = *params;
    let mut history = run_sir(
        ys,
        n,
        opts,
        seed,
        &|rng| init.sample(rng),
        model.prior(),
        false,
        |t, x_prev, s: &M::Stats, rng| {
            let x = model.sample_transition(x_prev, t, &p, rng);
            (x, p, *s, model.observation_logpdf(ys[t - 1], x, &p))
        },
    )
    .map_err(|e| match e {
        Error::DegenerateWeights { t, .. } => Error::DegenerateWeights { t, theta: Some(format!("{p:?}")) },
        other => other,
    })?;
    history.fixed_params = Some(p);
    history.final_suffstats = None;
    Ok(history)
}

/// Storvik's filter: per particle, draw `theta ~ p(theta | s_{t-1})`,
/// propagate, weight by the observation density, update the sufficient
/// statistics, then resample states and statistics jointly.
pub fn storvik_filter<M: StateSpaceModel>(
    model: &M,
    ys: &[f64],
    n: usize,
    opts: &FilterOptions,
    seed: Seed,
) -> Result<FilterHistory<M::Params, M::Stats>> {
    check_observations(model, ys)?;
    let init = model.initial_state();
    run_sir(
        ys,
        n,
        opts,
        seed,
        &|rng| init.sample(rng),
        model.prior(),
        true,
        |t, x_prev, s: &M::Stats, rng| {
            let y = ys[t - 1];
            let theta = model.sample_params(s, rng);
            let x = model.sample_transition(x_prev, t, &theta, rng);
            let log_obs = model.observation_logpdf(y, x, &theta);
            let s_new = model.update_stats(s, x_prev, x, y, t);
            (x, theta, s_new, log_obs)
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::kalman_filter;
    use crate::filters::LinearSystem;
    use crate::model::{simulate, Ar1, Ar1Params, PointMass};

    fn ar1_data(seed: u64, t: usize) -> (Ar1, Ar1Params, Vec<f64>) {
        let m = Ar1::default();
        let p = m.generating_params();
        let d = simulate(&m, &p, t, 0.0, Seed(seed)).unwrap();
        (m, p, d.observations)
    }

    #[test]
    fn weights_normalize_and_lengths_agree() {
        let (m, _, ys) = ar1_data(1, 30);
        let h = storvik_filter(&m, &ys, 200, &FilterOptions::default(), Seed(2)).unwrap();
        assert_eq!(h.clouds.len(), 30);
        for c in &h.clouds {
            assert_eq!(c.states.len(), 200);
            assert_eq!(c.params.len(), 200);
            assert_eq!(c.ancestors.len(), 200);
            let w = c.weights();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(w.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn single_particle_is_one_path() {
        let (m, p, ys) = ar1_data(3, 15);
        let h = bootstrap_filter(&m, &p, &ys, 1, &FilterOptions::default(), Seed(4)).unwrap();
        for c in &h.clouds {
            assert_eq!(c.ancestors, vec![0]);
            assert_eq!(c.weights(), vec![1.0]);
        }
    }

    #[test]
    fn huge_observation_noise_tracks_the_prior() {
        let m = Ar1::default();
        let p = Ar1Params { phi: 0.9, w: 1.0, v: 1e8 };
        let ys = vec![50.0; 10];
        let h = bootstrap_filter(&m, &p, &ys, 20_000, &FilterOptions::default(), Seed(5)).unwrap();
        for (m, sd) in h.filtered_moments() {
            // prior mean is 0 at every t; sd of the mean is at most ~3.3/sqrt(20000)
            assert!(m.abs() < 5.0 * sd / (20_000f64).sqrt(), "mean {m}");
        }
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn results_do_not_depend_on_thread_count() {
        let (m, _, ys) = ar1_data(6, 20);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| storvik_filter(&m, &ys, 500, &FilterOptions::default(), Seed(7)).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn storvik_with_point_mass_prior_matches_bootstrap() {
        let (m, p, ys) = ar1_data(8, 25);
        let pm = PointMass::new(m.clone(), p);
        let a = storvik_filter(&pm, &ys, 3000, &FilterOptions::default(), Seed(9)).unwrap();
        let b = bootstrap_filter(&m, &p, &ys, 3000, &FilterOptions::default(), Seed(9)).unwrap();
        let k = kalman_filter(&LinearSystem::from_model(&m, &p, ys.len()).unwrap(), &ys).unwrap();
        for ((ma, mb), (kc, km)) in a
            .filtered_moments()
            .iter()
            .zip(b.filtered_moments())
            .zip(k.c.iter().zip(&k.m))
        {
            // resampling inflates the variance of the weighted mean a few-fold
            let se = (4.0 * kc / 3000.0).sqrt();
            assert!((ma.0 - mb.0).abs() < 1e-12, "{} vs {}", ma.0, mb.0);
            assert!((ma.0 - km).abs() < 4.0 * se, "{} vs {km}", ma.0);
        }
    }

    #[test]
    fn ess_gate_keeps_evidence_consistent() {
        let (m, p, ys) = ar1_data(12, 40);
        let exact = kalman_filter(&LinearSystem::from_model(&m, &p, 40).unwrap(), &ys).unwrap().log_likelihood;
        let opts = FilterOptions { ess_threshold: Some(0.5), ..Default::default() };
        let h = bootstrap_filter(&m, &p, &ys, 20_000, &opts, Seed(13)).unwrap();
        let est: f64 = h.log_increments.iter().sum();
        assert!((est - exact).abs() < 0.3, "{est} vs {exact}");
    }
}
