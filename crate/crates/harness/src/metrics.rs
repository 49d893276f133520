//! Accuracy metrics against a reference posterior.

use serde::Serialize;
use smcsmooth::filters::FilterHistory;
use smcsmooth::model::ParamVector;
use smcsmooth::smoothers::Summary;
use smcsmooth::{Error, Result};

/// `|est_t - ref_t| / ref_sd_t` for every t.
pub fn standardized_errors(est_means: &[f64], ref_means: &[f64], ref_sds: &[f64]) -> Result<Vec<f64>> {
    if est_means.len() != ref_means.len() || ref_means.len() != ref_sds.len() {
        return Err(Error::Shape(format!(
            "standardized errors need equal lengths, got {}, {} and {}",
            est_means.len(),
            ref_means.len(),
            ref_sds.len()
        )));
    }
    est_means
        .iter()
        .zip(ref_means)
        .zip(ref_sds)
        .enumerate()
        .map(|(k, ((e, r), s))| {
            if *s > 0.0 && s.is_finite() {
                Ok((e - r).abs() / s)
            } else {
                Err(Error::Metric(format!("reference posterior sd is {s} at t={}", k + 1)))
            }
        })
        .collect()
}

/// Mean standardized absolute error of the smoothed state means.
pub fn mae_star(est_means: &[f64], ref_means: &[f64], ref_sds: &[f64]) -> Result<f64> {
    let e = standardized_errors(est_means, ref_means, ref_sds)?;
    Ok(e.iter().sum::<f64>() / e.len() as f64)
}

/// Mean over parameters of `|mean - ref mean| / ref sd`.
pub fn maep_star(est: &[(&str, Summary)], reference: &[(&str, Summary)]) -> Result<f64> {
    let same_block = est.len() == reference.len() && est.iter().zip(reference).all(|(a, b)| a.0 == b.0);
    if !same_block || est.is_empty() {
        let names = |v: &[(&str, Summary)]| v.iter().map(|p| p.0).collect::<Vec<_>>().join(",");
        return Err(Error::Shape(format!("parameter blocks differ: [{}] vs [{}]", names(est), names(reference))));
    }
    let mut total = 0.0;
    for ((name, e), (_, r)) in est.iter().zip(reference) {
        if !(r.sd > 0.0 && r.sd.is_finite()) {
            return Err(Error::Metric(format!("reference posterior sd of `{name}` is {}", r.sd)));
        }
        total += (e.mean - r.mean).abs() / r.sd;
    }
    Ok(total / est.len() as f64)
}

/// Weighted sample correlation; `None` when either variable has zero spread.
pub fn weighted_correlation(x: &[f64], y: &[f64], w: &[f64]) -> Option<f64> {
    let total: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / total;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / total;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for ((a, b), wi) in x.iter().zip(y).zip(w) {
        let (dx, dy) = (a - mx, b - my);
        sxx += wi * dx * dx;
        syy += wi * dy * dy;
        sxy += wi * dx * dy;
    }
    let denom = (sxx * syy).sqrt();
    (denom > 0.0 && denom.is_finite()).then(|| (sxy / denom).clamp(-1.0, 1.0))
}

/// Filtered correlation between `x_t` and each transformed parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationCurves {
    pub names: Vec<&'static str>,
    /// `values[param][t - 1]`.
    pub values: Vec<Vec<f64>>,
    /// Set where a variance vanished and the value was reported as 0.
    pub flagged: Vec<Vec<bool>>,
}

impl CorrelationCurves {
    /// Mean `|corr|` of parameter `p` over 1-based `t` in `lo..=hi`.
    pub fn mean_abs(&self, p: usize, lo: usize, hi: usize) -> f64 {
        let v = &self.values[p][lo - 1..hi];
        v.iter().map(|c| c.abs()).sum::<f64>() / v.len() as f64
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| *n == name)
    }
}

/// Per-t weighted correlation between states and parameters in each
/// filtering cloud. Known-parameter histories have constant parameters and
/// give flagged zeros.
pub fn state_param_correlation<P: ParamVector, S: Copy>(history: &FilterHistory<P, S>) -> Result<CorrelationCurves> {
    let t_len = history.clouds.len();
    let mut values = vec![vec![0.0; t_len]; P::DIM];
    let mut flagged = vec![vec![false; t_len]; P::DIM];
    for (k, cloud) in history.clouds.iter().enumerate() {
        if cloud.params.is_empty() {
            if history.fixed_params.is_none() {
                return Err(Error::Unavailable(format!("cloud at t={} stores no parameter draws", cloud.t)));
            }
            for f in flagged.iter_mut() {
                f[k] = true;
            }
            continue;
        }
        let w = cloud.weights();
        for p in 0..P::DIM {
            let theta: Vec<f64> = cloud.params.iter().map(|q| q.transformed(p)).collect();
            match weighted_correlation(&cloud.states, &theta, &w) {
                Some(c) => values[p][k] = c,
                None => flagged[p][k] = true,
            }
        }
    }
    Ok(CorrelationCurves { names: P::names().to_vec(), values, flagged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use smcsmooth::filters::{bootstrap_filter, storvik_filter, FilterOptions, ParticleCloud};
    use smcsmooth::model::{simulate, Ar1, Ar1Params, StateSpaceModel};
    use smcsmooth::rng::Seed;
    use smcsmooth::stats::std_normal;

    fn summary(mean: f64, sd: f64) -> Summary {
        Summary { mean, sd, q025: mean - 2.0 * sd, q500: mean, q975: mean + 2.0 * sd }
    }

    #[test]
    fn identical_means_give_zero() {
        let m = [0.3, -1.0, 2.5];
        assert_eq!(standardized_errors(&m, &m, &[1.0, 2.0, 0.5]).unwrap(), vec![0.0; 3]);
        assert_eq!(mae_star(&m, &m, &[1.0, 2.0, 0.5]).unwrap(), 0.0);
    }

    #[test]
    fn one_sd_offsets_give_ones() {
        let r = [0.3, -1.0, 2.5];
        let sd = [1.0, 2.0, 0.5];
        let est: Vec<f64> = r.iter().zip(&sd).map(|(a, b)| a + b).collect();
        let e = standardized_errors(&est, &r, &sd).unwrap();
        assert!(e.iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn zero_reference_sd_names_t() {
        let err = standardized_errors(&[0.0, 0.0], &[0.0, 0.0], &[1.0, 0.0]).unwrap_err();
        assert!(matches!(&err, Error::Metric(m) if m.contains("t=2")), "{err}");
    }

    #[test]
    fn maep_examples() {
        let a = [("phi", summary(0.7, 0.1)), ("w", summary(1.0, 0.3))];
        assert_eq!(maep_star(&a, &a).unwrap(), 0.0);
        let one = [("phi", summary(0.8, 0.1))];
        let r = [("phi", summary(0.7, 0.1))];
        assert!((maep_star(&one, &r).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(maep_star(&one, &a), Err(Error::Shape(_))));
        assert!(matches!(maep_star(&[("w", summary(0.8, 0.1))], &r), Err(Error::Shape(_))));
    }

    #[test]
    fn constant_theta_gives_flagged_zeros() {
        let m = Ar1::default();
        let p = m.generating_params();
        let d = simulate(&m, &p, 20, 0.0, Seed(1)).unwrap();
        let h = bootstrap_filter(&m, &p, &d.observations, 100, &FilterOptions::default(), Seed(2)).unwrap();
        let c = state_param_correlation(&h).unwrap();
        assert!(c.values.iter().flatten().all(|v| *v == 0.0));
        assert!(c.flagged.iter().flatten().all(|f| *f));
    }

    #[test]
    fn bivariate_normal_cloud_recovers_rho() {
        let n = 20_000;
        let rho: f64 = 0.5;
        let mut rng = Seed(3).stream(0, 0, 0);
        let (mut xs, mut params) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for _ in 0..n {
            let (a, b) = (std_normal(&mut rng), std_normal(&mut rng));
            xs.push(a);
            params.push(Ar1Params { phi: rho * a + (1.0 - rho * rho).sqrt() * b, w: 1.0, v: 1.0 });
        }
        let cloud = ParticleCloud {
            t: 1,
            states: xs,
            params,
            suffstats: None,
            log_weights: vec![0.0; n],
            ancestors: (0..n as u32).collect(),
        };
        let h: FilterHistory<Ar1Params, ()> = FilterHistory {
            n,
            x0: vec![0.0; n],
            clouds: vec![cloud],
            log_increments: vec![0.0],
            final_suffstats: None,
            fixed_params: None,
            seed: Seed(0),
            thinning: 1,
        };
        let c = state_param_correlation(&h).unwrap();
        let se = (1.0 - rho * rho) / (n as f64).sqrt();
        assert!((c.values[0][0] - rho).abs() < 3.0 * se, "{}", c.values[0][0]);
        assert!(c.flagged[1][0] && c.values[1][0] == 0.0);
    }

    #[test]
    fn storvik_history_has_one_curve_per_parameter() {
        let m = Ar1::default();
        let d = simulate(&m, &m.generating_params(), 30, 0.0, Seed(4)).unwrap();
        let h = storvik_filter(&m, &d.observations, 500, &FilterOptions::default(), Seed(5)).unwrap();
        let c = state_param_correlation(&h).unwrap();
        assert_eq!(c.names, vec!["phi", "w", "v"]);
        assert!(c.values.iter().all(|v| v.len() == 30 && v.iter().all(|x| x.abs() <= 1.0)));
    }

    proptest! {
        #[test]
        fn errors_are_nonnegative_and_scale_free(
            v in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, 0.01f64..3.0), 1..40),
            scale in 0.1f64..10.0,
        ) {
            let est: Vec<f64> = v.iter().map(|x| x.0).collect();
            let r: Vec<f64> = v.iter().map(|x| x.1).collect();
            let sd: Vec<f64> = v.iter().map(|x| x.2).collect();
            let e = standardized_errors(&est, &r, &sd).unwrap();
            prop_assert!(e.iter().all(|x| *x >= 0.0));
            let scaled = |u: &[f64]| u.iter().map(|x| x * scale).collect::<Vec<_>>();
            let e2 = standardized_errors(&scaled(&est), &scaled(&r), &scaled(&sd)).unwrap();
            for (a, b) in e.iter().zip(&e2) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn correlation_is_bounded_and_symmetric(
            pts in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, 0.01f64..1.0), 3..50),
        ) {
            let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let w: Vec<f64> = pts.iter().map(|p| p.2).collect();
            if let Some(c) = weighted_correlation(&x, &y, &w) {
                prop_assert!(c.abs() <= 1.0);
                let c2 = weighted_correlation(&y, &x, &w).unwrap();
                prop_assert!((c - c2).abs() < 1e-12);
            }
        }
    }
}
