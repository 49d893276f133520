use smcsmooth::evidence::{harmonic_mean_log_marginal, smc_log_marginal};
use smcsmooth::filters::{bootstrap_filter, kalman_filter, FilterOptions, LinearSystem};
use smcsmooth::mcmc::{gibbs_ffbs, ChainOptions};
use smcsmooth::model::{simulate, Ar1, Ar1Params, PointMass};
use smcsmooth::{stats, Seed};

const P: Ar1Params = Ar1Params { phi: 0.75, w: 1.0, v: 1.0 };

#[test]
fn single_particle_single_step() {
    // with V = 1 and x_1 = y_1 - 2 exactly at W -> 0 the estimate is the density itself
    let m = Ar1::default();
    let p = Ar1Params { phi: 0.0, w: 1e-300, v: 1.0 };
    let y = 2.0;
    let h = bootstrap_filter(&m, &p, &[y], 1, &FilterOptions::default(), Seed(1)).unwrap();
    let est = smc_log_marginal(&h).unwrap();
    let x = h.clouds[0].states[0];
    assert!((est.log_marginal - stats::normal_logpdf(y, x, 1.0)).abs() < 1e-12);
    assert_eq!(est.increments.len(), 1);
}

#[test]
fn converges_to_the_kalman_likelihood_at_the_monte_carlo_rate() {
    let m = Ar1::default();
    let ys = simulate(&m, &P, 50, 0.0, Seed(2)).unwrap().observations;
    let exact = kalman_filter(&LinearSystem::from_model(&m, &P, 50).unwrap(), &ys).unwrap().log_likelihood;
    let ns = [100usize, 1000, 10_000, 100_000];
    let reps = [200u64, 60, 20, 8];
    let mut pts = Vec::new();
    for (&n, &r) in ns.iter().zip(&reps) {
        let errs: Vec<f64> = (0..r)
            .map(|k| {
                let h = bootstrap_filter(&m, &P, &ys, n, &FilterOptions::default(), Seed(100 * n as u64 + k)).unwrap();
                smc_log_marginal(&h).unwrap().log_marginal - exact
            })
            .collect();
        let rmse = (errs.iter().map(|e| e * e).sum::<f64>() / r as f64).sqrt();
        pts.push(((n as f64).ln(), rmse.ln()));
        if n == 100_000 {
            let (mean, var) = stats::mean_var(&errs);
            let se = var.sqrt();
            assert!(errs[0].abs() < 3.0 * se.max(1e-3), "N=1e5 error {} vs sd {se}", errs[0]);
            assert!(mean.abs() < 3.0 * se);
        }
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = sxy * sxy / (sxx * syy);
    assert!(r2 > 0.8, "R^2 = {r2}");
    assert!((slope + 0.5).abs() < 0.15, "slope {slope}");
}

#[test]
fn harmonic_mean_is_finite_and_above_the_evidence() {
    let m = PointMass::new(Ar1::default(), P);
    let ys = simulate(&m.inner, &P, 30, 0.0, Seed(3)).unwrap().observations;
    let exact = kalman_filter(&LinearSystem::from_model(&m.inner, &P, 30).unwrap(), &ys).unwrap().log_likelihood;
    let chain = gibbs_ffbs(&m, &ys, ChainOptions::new(5000), Seed(4)).unwrap();
    let hm = harmonic_mean_log_marginal(&chain, &m, &ys).unwrap();
    assert!(hm.log_marginal.is_finite());
    // the estimator is biased upwards
    assert!(hm.log_marginal > exact);
    assert_eq!(hm.n, chain.draws.len());
}
