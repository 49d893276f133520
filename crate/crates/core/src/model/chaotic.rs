use nalgebra::{Matrix1, Vector1};

use super::{check_path, param_vector, InitialState, Nig, StateSpaceModel};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::stats;

param_vector!(
    /// Log growth rate, process noise variance, Poisson sampling rate.
    ChaoticParams { mu: Real, sigma2: Positive, phi: Positive }
);

/// `phi ~ Gamma(a, b)` (shape, rate) and `(mu, sigma2) ~ NIG(m, c, n, d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChaoticStats {
    pub a: f64,
    pub b: f64,
    pub nig: Nig<1>,
}

/// Ricker population model on the log scale:
/// `x_t = mu + x_{t-1} - exp(x_{t-1}) + N(0, sigma2)`, `y_t ~ Poisson(phi exp(x_t))`.
///
/// Observations must be non-negative integers.
#[derive(Debug, Clone, PartialEq)]
pub struct Chaotic {
    pub prior: ChaoticStats,
    pub x0: InitialState,
}

impl Default for Chaotic {
    fn default() -> Self {
        Chaotic {
            prior: ChaoticStats {
                a: 15.0,
                b: 1.0,
                nig: Nig::new(Vector1::new(5.0), Matrix1::new(0.1), 2.0, 2.0),
            },
            // log of the Ricker equilibrium N* = log r at r = e^3.8
            x0: InitialState::Fixed(3.8f64.ln()),
        }
    }
}

impl StateSpaceModel for Chaotic {
    type Params = ChaoticParams;
    type Stats = ChaoticStats;

    fn name(&self) -> &'static str {
        "chaotic"
    }

    fn initial_state(&self) -> InitialState {
        self.x0
    }

    fn prior(&self) -> ChaoticStats {
        self.prior
    }

    #[inline]
    fn transition_mean(&self, x_prev: f64, _t: usize, p: &ChaoticParams) -> f64 {
        p.mu + x_prev - x_prev.exp()
    }

    #[inline]
    fn transition_var(&self, p: &ChaoticParams) -> f64 {
        p.sigma2
    }

    #[inline]
    fn observation_logpdf(&self, y: f64, x: f64, p: &ChaoticParams) -> f64 {
        stats::poisson_logpmf(y, p.phi * x.exp())
    }

    fn sample_observation(&self, x: f64, p: &ChaoticParams, rng: &mut Rng) -> f64 {
        use rand_distr::{Distribution, Poisson};
        let lambda = p.phi * x.exp();
        if lambda <= 0.0 {
            return 0.0;
        }
        // Poisson samples are integral floats.
        Poisson::new(lambda).map(|d| d.sample(rng)).unwrap_or(f64::NAN)
    }

    fn check_observation(&self, y: f64) -> Result<()> {
        if y.is_finite() && y >= 0.0 && y.fract() == 0.0 {
            Ok(())
        } else {
            Err(Error::domain("y", format!("Poisson observation must be a non-negative integer, got {y}")))
        }
    }

    #[inline]
    fn update_stats(&self, s: &ChaoticStats, x_prev: f64, x: f64, y: f64, _t: usize) -> ChaoticStats {
        ChaoticStats {
            a: s.a + y,
            b: s.b + x.exp(),
            nig: s.nig.update(&Vector1::new(1.0), x - x_prev + x_prev.exp()),
        }
    }

    fn batch_posterior(&self, states: &[f64], ys: &[f64]) -> Result<ChaoticStats> {
        check_path(states, ys)?;
        let zs: Vec<f64> = states.windows(2).map(|w| w[1] - w[0] + w[0].exp()).collect();
        let fs = vec![Vector1::new(1.0); zs.len()];
        Ok(ChaoticStats {
            a: self.prior.a + ys.iter().sum::<f64>(),
            b: self.prior.b + states[1..].iter().map(|x| x.exp()).sum::<f64>(),
            nig: self.prior.nig.batch(&fs, &zs)?,
        })
    }

    fn sample_params(&self, s: &ChaoticStats, rng: &mut Rng) -> ChaoticParams {
        let (mu, sigma2) = s.nig.sample(rng);
        let phi = stats::gamma(rng, s.a, s.b);
        ChaoticParams { mu: mu[0], sigma2, phi }
    }

    fn stats_values(&self, s: &ChaoticStats) -> Vec<(&'static str, f64)> {
        let mut out = vec![("a", s.a), ("b", s.b)];
        s.nig.push_values(&["m", "c", "n", "d"], &mut out);
        out
    }

    fn stats_valid(&self, s: &ChaoticStats) -> bool {
        s.nig.is_valid() && s.a > 0.0 && s.b > 0.0 && s.b.is_finite()
    }

    /// `log((y + 1/2) / E[phi])` under the prior.
    fn crude_states(&self, ys: &[f64]) -> Vec<f64> {
        let phi = self.prior.a / self.prior.b;
        ys.iter().map(|y| ((y + 0.5) / phi).ln()).collect()
    }

    fn generating_params(&self) -> ChaoticParams {
        ChaoticParams { mu: 3.8, sigma2: 0.3, phi: 10.0 }
    }

    fn set_hyper(&mut self, key: &str, values: &[f64]) -> Result<()> {
        let [v] = values else {
            return Err(Error::Parse(format!("hyperparameter `{key}` takes one value")));
        };
        match key {
            "a0" => self.prior.a = *v,
            "b0" => self.prior.b = *v,
            "m0" => self.prior.nig.b[0] = *v,
            "c0" => self.prior.nig.prec[(0, 0)] = *v,
            "n0" => self.prior.nig.n = *v,
            "d0" => self.prior.nig.d = *v,
            "x0" => self.x0 = InitialState::Fixed(*v),
            _ => return Err(Error::Parse(format!("unknown chaotic hyperparameter `{key}`"))),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{observation_logpdf, simulate, update_suffstats};
    use crate::rng::Seed;

    #[test]
    fn gamma_shape_accumulates_counts() {
        let m = Chaotic::default();
        let s = update_suffstats(&m, &m.prior, 1.0, 1.2, 7.0, 1).unwrap();
        assert_eq!(s.a, 22.0);
        assert_eq!(s.b, 1.0 + 1.2f64.exp());
    }

    #[test]
    fn simulated_counts_are_integers() {
        let m = Chaotic::default();
        let d = simulate(&m, &m.generating_params(), 100, m.x0.mean(), Seed(11)).unwrap();
        assert!(d.observations.iter().all(|y| *y >= 0.0 && y.fract() == 0.0));
    }

    #[test]
    fn zero_count_density_is_minus_rate() {
        let m = Chaotic::default();
        let p = ChaoticParams { mu: 3.8, sigma2: 0.3, phi: 2.5 };
        let x = 0.7;
        let lp = observation_logpdf(&m, 0.0, x, &p).unwrap();
        assert!((lp + 2.5 * x.exp()).abs() < 1e-12);
    }

    #[test]
    fn fractional_count_is_a_domain_error() {
        let m = Chaotic::default();
        let p = m.generating_params();
        assert!(matches!(observation_logpdf(&m, 2.5, 0.0, &p), Err(Error::Domain { .. })));
        assert!(matches!(observation_logpdf(&m, -1.0, 0.0, &p), Err(Error::Domain { .. })));
    }
}
