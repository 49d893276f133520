use nalgebra::{Matrix1, Vector1};

use super::{check_path, param_vector, InitialState, LinearObservation, LinearTransition, Nig, StateSpaceModel};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::stats;

param_vector!(
    /// AR coefficient, evolution variance, observation variance.
    Ar1Params { phi: Real, w: Positive, v: Positive }
);

/// `(phi, W) ~ NIG(b, B, n, d)`, `V ~ IG(nu, delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Stats {
    pub nig: Nig<1>,
    pub nu: f64,
    pub delta: f64,
}

/// AR(1) plus noise: `x_t = phi x_{t-1} + N(0, W)`, `y_t = x_t + N(0, V)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ar1 {
    pub prior: Ar1Stats,
    pub x0: InitialState,
}

impl Default for Ar1 {
    fn default() -> Self {
        Ar1 {
            prior: Ar1Stats {
                nig: Nig::new(Vector1::new(0.5), Matrix1::new(1.0), 2.0, 2.0),
                nu: 2.0,
                delta: 2.0,
            },
            x0: InitialState::Fixed(0.0),
        }
    }
}

impl StateSpaceModel for Ar1 {
    type Params = Ar1Params;
    type Stats = Ar1Stats;

    fn name(&self) -> &'static str {
        "ar1"
    }

    fn initial_state(&self) -> InitialState {
        self.x0
    }

    fn prior(&self) -> Ar1Stats {
        self.prior
    }

    #[inline]
    fn transition_mean(&self, x_prev: f64, _t: usize, p: &Ar1Params) -> f64 {
        p.phi * x_prev
    }

    #[inline]
    fn transition_var(&self, p: &Ar1Params) -> f64 {
        p.w
    }

    #[inline]
    fn observation_logpdf(&self, y: f64, x: f64, p: &Ar1Params) -> f64 {
        stats::normal_logpdf(y, x, p.v)
    }

    fn sample_observation(&self, x: f64, p: &Ar1Params, rng: &mut Rng) -> f64 {
        x + p.v.sqrt() * stats::std_normal(rng)
    }

    #[inline]
    fn update_stats(&self, s: &Ar1Stats, x_prev: f64, x: f64, y: f64, _t: usize) -> Ar1Stats {
        let e = y - x;
        Ar1Stats {
            nig: s.nig.update(&Vector1::new(x_prev), x),
            nu: s.nu + 0.5,
            delta: s.delta + e * e / 2.0,
        }
    }

    fn batch_posterior(&self, states: &[f64], ys: &[f64]) -> Result<Ar1Stats> {
        check_path(states, ys)?;
        let fs: Vec<_> = states[..ys.len()].iter().map(|&x| Vector1::new(x)).collect();
        let nig = self.prior.nig.batch(&fs, &states[1..])?;
        let sse: f64 = ys.iter().zip(&states[1..]).map(|(y, x)| (y - x) * (y - x)).sum();
        Ok(Ar1Stats {
            nig,
            nu: self.prior.nu + 0.5 * ys.len() as f64,
            delta: self.prior.delta + sse / 2.0,
        })
    }

    fn sample_params(&self, s: &Ar1Stats, rng: &mut Rng) -> Ar1Params {
        let (beta, w) = s.nig.sample(rng);
        let v = stats::inv_gamma(rng, s.nu, s.delta);
        Ar1Params { phi: beta[0], w, v }
    }

    fn stats_values(&self, s: &Ar1Stats) -> Vec<(&'static str, f64)> {
        let mut out = Vec::with_capacity(6);
        s.nig.push_values(&["b", "B", "n", "d"], &mut out);
        out.push(("nu", s.nu));
        out.push(("delta", s.delta));
        out
    }

    fn stats_valid(&self, s: &Ar1Stats) -> bool {
        s.nig.is_valid() && s.nu > 0.0 && s.delta > 0.0 && s.delta.is_finite()
    }

    fn linear_transition(&self, p: &Ar1Params, _t: usize) -> Option<LinearTransition> {
        Some(LinearTransition { intercept: 0.0, g: p.phi, w: p.w })
    }

    fn linear_observation(&self, p: &Ar1Params) -> Option<LinearObservation> {
        Some(LinearObservation { f: 1.0, v: p.v })
    }

    fn crude_states(&self, ys: &[f64]) -> Vec<f64> {
        ys.to_vec()
    }

    fn generating_params(&self) -> Ar1Params {
        Ar1Params { phi: 0.75, w: 1.0, v: 1.0 }
    }

    fn set_hyper(&mut self, key: &str, values: &[f64]) -> Result<()> {
        let one = || match values {
            [v] => Ok(*v),
            _ => Err(Error::Parse(format!("hyperparameter `{key}` takes one value"))),
        };
        match key {
            "b0" => self.prior.nig.b[0] = one()?,
            "B0" => self.prior.nig.prec[(0, 0)] = one()?,
            "n0" => self.prior.nig.n = one()?,
            "d0" => self.prior.nig.d = one()?,
            "nu0" => self.prior.nu = one()?,
            "delta0" => self.prior.delta = one()?,
            "x0" => self.x0 = InitialState::Fixed(one()?),
            _ => return Err(Error::Parse(format!("unknown ar1 hyperparameter `{key}`"))),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{simulate, update_suffstats, ParamVector};
    use crate::rng::Seed;

    #[test]
    fn one_step_recursion_by_hand() {
        // b=0.5, B=1, x0=0, x1=2, y1=1: B1 = 1, b1 = 0.5, d1 = 2 + (0.25 + 4 - 0.25)/2 = 4.
        let m = Ar1::default();
        let s = update_suffstats(&m, &m.prior, 0.0, 2.0, 1.0, 1).unwrap();
        assert_eq!(s.nig.b[0], 0.5);
        assert_eq!(s.nig.prec[(0, 0)], 1.0);
        assert_eq!(s.nig.n, 2.5);
        assert_eq!(s.nig.d, 4.0);
        assert_eq!(s.nu, 2.5);
        assert_eq!(s.delta, 2.5);
    }

    #[test]
    fn zero_noise_fixed_point() {
        let m = Ar1::default();
        let p = Ar1Params { phi: 1.0, w: 0.0, v: 0.0 };
        let d = simulate(&m, &p, 20, 3.25, Seed(1)).unwrap();
        assert!(d.states.iter().all(|&x| x == 3.25));
        assert!(d.observations.iter().all(|&y| y == 3.25));
    }

    #[test]
    fn negative_variance_is_rejected_by_name() {
        let m = Ar1::default();
        let p = Ar1Params { phi: 0.5, w: -1.0, v: 1.0 };
        match simulate(&m, &p, 5, 0.0, Seed(1)) {
            Err(Error::Domain { block, .. }) => assert_eq!(block, "w"),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn transition_density_peaks_at_mean() {
        let m = Ar1::default();
        let p = Ar1Params { phi: 0.8, w: 2.0, v: 1.0 };
        let at_mean = m.transition_logpdf(0.8 * 1.5, 1.5, 1, &p);
        assert!((at_mean - (-0.5 * (2.0 * std::f64::consts::PI * 2.0).ln())).abs() < 1e-12);
        assert!(m.transition_logpdf(1.3, 1.5, 1, &p) < at_mean);
    }

    #[test]
    fn linear_hooks_reproduce_generic_densities() {
        let m = Ar1::default();
        let p = Ar1Params { phi: -0.3, w: 0.7, v: 2.2 };
        let lt = m.linear_transition(&p, 3).unwrap();
        let lo = m.linear_observation(&p).unwrap();
        for &(x, xp, y) in &[(0.1, -2.0, 0.4), (3.0, 1.0, -1.0)] {
            let a = stats::normal_logpdf(x, lt.intercept + lt.g * xp, lt.w);
            assert!((a - m.transition_logpdf(x, xp, 3, &p)).abs() < 1e-12);
            let b = stats::normal_logpdf(y, lo.f * x, lo.v);
            assert!((b - m.observation_logpdf(y, x, &p)).abs() < 1e-12);
        }
        assert_eq!(Ar1Params::names(), &["phi", "w", "v"]);
    }
}
