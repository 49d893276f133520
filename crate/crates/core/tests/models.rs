use proptest::prelude::*;
use smcsmooth::model::{
    iterate_suffstats, simulate, update_suffstats, Ar1, Ar1Params, Ar1Stats, Chaotic, ChaoticParams, ChaoticStats,
    Growth, Nig, ParamVector, StateSpaceModel, StochasticVolatility,
};
use smcsmooth::{stats, Error, Seed};

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

fn assert_recursion_matches_batch<M: StateSpaceModel>(model: &M, t_len: usize, seed: u64) {
    let theta = model.generating_params();
    let x0 = model.initial_state().mean();
    let data = simulate(model, &theta, t_len, x0, Seed(seed)).unwrap();
    let path = data.full_path();
    let rec = iterate_suffstats(model, &path, &data.observations).unwrap();
    let batch = model.batch_posterior(&path, &data.observations).unwrap();
    for ((name, a), (_, b)) in model.stats_values(&rec).into_iter().zip(model.stats_values(&batch)) {
        assert!(close(a, b, 1e-10), "{} {name}: recursion {a} vs batch {b}", model.name());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn recursion_equals_batch_ar1(t in 1usize..=100, seed in any::<u64>()) {
        assert_recursion_matches_batch(&Ar1::default(), t, seed);
    }

    #[test]
    fn recursion_equals_batch_growth(t in 1usize..=100, seed in any::<u64>()) {
        assert_recursion_matches_batch(&Growth::default(), t, seed);
    }

    #[test]
    fn recursion_equals_batch_chaotic(t in 1usize..=100, seed in any::<u64>()) {
        assert_recursion_matches_batch(&Chaotic::default(), t, seed);
    }

    #[test]
    fn recursion_equals_batch_sv(t in 1usize..=100, seed in any::<u64>()) {
        assert_recursion_matches_batch(&StochasticVolatility::default(), t, seed);
    }

    #[test]
    fn counts_grow_by_one_half(x_prev in -5.0f64..5.0, x in -5.0f64..5.0, y in -5.0f64..5.0) {
        let m = Ar1::default();
        let s = update_suffstats(&m, &m.prior(), x_prev, x, y, 1).unwrap();
        prop_assert_eq!(s.nig.n, m.prior().nig.n + 0.5);
        prop_assert_eq!(s.nu, m.prior().nu + 0.5);
    }

    #[test]
    fn ar1_linear_hooks_match_generic_densities(
        phi in -1.5f64..1.5, w in 0.01f64..10.0, v in 0.01f64..10.0, x_prev in -10.0f64..10.0, x in -10.0f64..10.0,
    ) {
        let m = Ar1::default();
        let p = Ar1Params { phi, w, v };
        let lt = m.linear_transition(&p, 3).unwrap();
        let lo = m.linear_observation(&p).unwrap();
        let tr = stats::normal_logpdf(x, lt.intercept + lt.g * x_prev, lt.w);
        let ob = stats::normal_logpdf(x_prev, lo.f * x, lo.v);
        prop_assert!((m.transition_logpdf(x, x_prev, 3, &p) - tr).abs() < 1e-12);
        prop_assert!((m.observation_logpdf(x_prev, x, &p) - ob).abs() < 1e-12);
    }

    #[test]
    fn sv_linear_transition_matches_generic_density(
        alpha in -2.0f64..2.0, beta in -1.0f64..1.0, w in 0.001f64..2.0, x_prev in -15.0f64..5.0, x in -15.0f64..5.0,
    ) {
        let m = StochasticVolatility::default();
        let p = smcsmooth::model::SvParams { mu: 0.0, alpha, beta, w };
        let lt = m.linear_transition(&p, 7).unwrap();
        let direct = stats::normal_logpdf(x, lt.intercept + lt.g * x_prev, lt.w);
        prop_assert!((m.transition_logpdf(x, x_prev, 7, &p) - direct).abs() < 1e-12);
    }
}

#[test]
fn empty_trajectory_leaves_the_prior() {
    let m = Growth::default();
    let s = m.batch_posterior(&[0.0], &[]).unwrap();
    assert_eq!(s, m.prior());
}

#[test]
fn misaligned_trajectory_is_a_shape_error() {
    let m = Ar1::default();
    assert!(matches!(m.batch_posterior(&[0.0, 1.0], &[1.0, 2.0]), Err(Error::Shape(_))));
}

#[test]
fn same_seed_same_draw() {
    let m = Growth::default();
    let a = m.sample_params(&m.prior(), &mut Seed(5).stream(0, 0, 0));
    let b = m.sample_params(&m.prior(), &mut Seed(5).stream(0, 0, 0));
    assert_eq!(a, b);
}

#[test]
fn inverse_gamma_block_has_the_analytic_mean() {
    let m = Ar1::default();
    let s = Ar1Stats { nu: 3.0, delta: 4.0, ..m.prior() };
    let mut rng = Seed(1).stream(0, 0, 0);
    let draws: Vec<f64> = (0..1_000_000).map(|_| m.sample_params(&s, &mut rng).v).collect();
    let (mean, var) = stats::mean_var(&draws);
    let se = (var / draws.len() as f64).sqrt();
    assert!((mean - 2.0).abs() < 3.0 * se, "mean {mean}, se {se}");
}

#[test]
fn gamma_block_has_the_analytic_mean() {
    let m = Chaotic::default();
    let s = ChaoticStats { a: 15.0, b: 1.0, ..m.prior() };
    let mut rng = Seed(2).stream(0, 0, 0);
    let draws: Vec<f64> = (0..1_000_000).map(|_| m.sample_params(&s, &mut rng).phi).collect();
    let (mean, var) = stats::mean_var(&draws);
    let se = (var / draws.len() as f64).sqrt();
    assert!((mean - 15.0).abs() < 3.0 * se, "mean {mean}, se {se}");
}

/// Means of the coefficients and of each inverse variance under the prior.
#[test]
fn prior_draws_reproduce_prior_moments() {
    let n = 400_000;
    let check = |name: &str, draws: Vec<f64>, expected: f64| {
        let (mean, var) = stats::mean_var(&draws);
        let se = (var / n as f64).sqrt();
        assert!((mean - expected).abs() < 4.0 * se, "{name}: {mean} vs {expected} (se {se})");
    };

    let m = Ar1::default();
    let mut rng = Seed(3).stream(0, 0, 0);
    let d: Vec<Ar1Params> = (0..n).map(|_| m.sample_params(&m.prior(), &mut rng)).collect();
    check("phi", d.iter().map(|p| p.phi).collect(), 0.5);
    check("1/w", d.iter().map(|p| 1.0 / p.w).collect(), 1.0);
    check("1/v", d.iter().map(|p| 1.0 / p.v).collect(), 1.0);

    let m = Growth::default();
    let mut rng = Seed(4).stream(0, 0, 0);
    let d: Vec<_> = (0..n).map(|_| m.sample_params(&m.prior(), &mut rng)).collect();
    check("alpha", d.iter().map(|p| p.alpha).collect(), 0.5);
    check("beta", d.iter().map(|p| p.beta).collect(), 25.0);
    check("gamma", d.iter().map(|p| p.gamma).collect(), 8.0);
    check("1/v", d.iter().map(|p| 1.0 / p.v).collect(), 1.0);

    let m = Chaotic::default();
    let mut rng = Seed(5).stream(0, 0, 0);
    let d: Vec<ChaoticParams> = (0..n).map(|_| m.sample_params(&m.prior(), &mut rng)).collect();
    check("mu", d.iter().map(|p| p.mu).collect(), 5.0);
    check("1/sigma2", d.iter().map(|p| 1.0 / p.sigma2).collect(), 1.0);
    check("phi", d.iter().map(|p| p.phi).collect(), 15.0);

    let m = StochasticVolatility::default();
    let mut rng = Seed(6).stream(0, 0, 0);
    let d: Vec<_> = (0..n).map(|_| m.sample_params(&m.prior(), &mut rng)).collect();
    check("mu", d.iter().map(|p| p.mu).collect(), 0.0);
    check("alpha", d.iter().map(|p| p.alpha).collect(), 0.0);
    check("beta", d.iter().map(|p| p.beta).collect(), 0.9);
    check("1/w", d.iter().map(|p| 1.0 / p.w).collect(), 1.0);
}

fn support_cycles<M: StateSpaceModel>(model: &M, cycles: usize) {
    let theta = model.generating_params();
    let x0 = model.initial_state().mean();
    let t_len = 200;
    let mut done = 0;
    let mut rep = 0;
    while done < cycles {
        let data = simulate(model, &theta, t_len, x0, Seed(rep)).unwrap();
        let path = data.full_path();
        let mut rng = Seed(rep).stream(1, 0, 0);
        let mut s = model.prior();
        for t in 1..=t_len {
            let p = model.sample_params(&s, &mut rng);
            assert!(p.check_support(false).is_ok(), "{} draw {p:?} outside support", model.name());
            s = update_suffstats(model, &s, path[t - 1], path[t], data.observations[t - 1], t).unwrap();
            assert!(model.stats_valid(&s));
        }
        done += t_len;
        rep += 1;
    }
}

#[test]
fn update_sample_cycles_stay_in_support() {
    support_cycles(&Ar1::default(), 1_000_000);
    support_cycles(&Growth::default(), 1_000_000);
    support_cycles(&Chaotic::default(), 1_000_000);
    support_cycles(&StochasticVolatility::default(), 1_000_000);
}

#[test]
fn ar1_generating_regime_has_the_stationary_variance() {
    let m = Ar1::default();
    let p = Ar1Params { phi: 0.75, w: 1.0, v: 1.0 };
    let vars: Vec<f64> = (0..400)
        .map(|s| stats::mean_var(&simulate(&m, &p, 100, 0.0, Seed(s)).unwrap().observations).1)
        .collect();
    let (mean, _) = stats::mean_var(&vars);
    // W/(1 - phi^2) + V, less the small-sample bias of a persistent series
    let stationary = 1.0 / (1.0 - 0.5625) + 1.0;
    assert!((1.5..=3.5).contains(&mean), "mean sample variance {mean}");
    assert!((mean - stationary).abs() < 0.4, "mean sample variance {mean} vs {stationary}");
}

#[test]
fn chaotic_counts_are_nonnegative_integers() {
    let m = Chaotic::default();
    let p = ChaoticParams { mu: 3.8, sigma2: 0.3, phi: 10.0 };
    let d = simulate(&m, &p, 500, 3.8f64.ln(), Seed(9)).unwrap();
    assert!(d.observations.iter().all(|y| *y >= 0.0 && y.fract() == 0.0));
}

#[test]
fn simulate_rejects_out_of_support_parameters_by_name() {
    let m = Chaotic::default();
    let p = ChaoticParams { mu: 3.8, sigma2: 0.3, phi: -1.0 };
    match simulate(&m, &p, 5, 0.0, Seed(1)) {
        Err(Error::Domain { block, .. }) => assert_eq!(block, "phi"),
        other => panic!("expected domain error, got {other:?}"),
    }
}

#[test]
fn nig_single_update_matches_hand_arithmetic() {
    let prior = Nig::<1>::new([0.5].into(), [[1.0]].into(), 2.0, 2.0);
    let s = prior.update(&[0.0].into(), 2.0);
    assert_eq!(s.b[0], 0.5);
    assert_eq!(s.prec[(0, 0)], 1.0);
    assert_eq!(s.n, 2.5);
    assert_eq!(s.d, 4.0);
}
