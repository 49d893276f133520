use nalgebra::{Matrix2, Vector2};

use super::{check_path, param_vector, InitialState, LinearTransition, Nig, StateSpaceModel};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::stats;

param_vector!(
    /// Expected return, volatility drift, volatility persistence, volatility innovation variance.
    SvParams { mu: Real, alpha: Real, beta: Real, w: Positive }
);

/// `((alpha, beta)', W) ~ NIG(m, C, n, d)` and `mu ~ N(a_mu, b_mu)` (`b_mu` a variance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvStats {
    pub nig: Nig<2>,
    pub a_mu: f64,
    pub b_mu: f64,
}

/// Stochastic volatility: `x_t = alpha + beta x_{t-1} + N(0, W)`,
/// `y_t = mu + exp(x_t / 2) N(0, 1)`.
///
/// The volatility block is a conjugate regression of `x_t` on `(1, x_{t-1})`.
/// `mu` is a normal mean observed with known heteroscedastic variances
/// `exp(x_t)`, giving `1/b_t = 1/b_{t-1} + exp(-x_t)` and
/// `a_t = b_t (a_{t-1}/b_{t-1} + exp(-x_t) y_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticVolatility {
    pub prior: SvStats,
    pub x0: InitialState,
}

impl Default for StochasticVolatility {
    fn default() -> Self {
        StochasticVolatility {
            prior: SvStats {
                nig: Nig::new(Vector2::new(0.0, 0.9), Matrix2::identity(), 2.0, 2.0),
                a_mu: 0.0,
                b_mu: 1.0,
            },
            x0: InitialState::Fixed(-10.0),
        }
    }
}

impl StateSpaceModel for StochasticVolatility {
    type Params = SvParams;
    type Stats = SvStats;

    fn name(&self) -> &'static str {
        "sv"
    }

    fn initial_state(&self) -> InitialState {
        self.x0
    }

    fn prior(&self) -> SvStats {
        self.prior
    }

    #[inline]
    fn transition_mean(&self, x_prev: f64, _t: usize, p: &SvParams) -> f64 {
        p.alpha + p.beta * x_prev
    }

    #[inline]
    fn transition_var(&self, p: &SvParams) -> f64 {
        p.w
    }

    #[inline]
    fn observation_logpdf(&self, y: f64, x: f64, p: &SvParams) -> f64 {
        let d = y - p.mu;
        -0.5 * (stats::LN_2PI + x + d * d * (-x).exp())
    }

    fn sample_observation(&self, x: f64, p: &SvParams, rng: &mut Rng) -> f64 {
        p.mu + (x / 2.0).exp() * stats::std_normal(rng)
    }

    #[inline]
    fn update_stats(&self, s: &SvStats, x_prev: f64, x: f64, y: f64, _t: usize) -> SvStats {
        let prec = (-x).exp();
        let b_mu = 1.0 / (1.0 / s.b_mu + prec);
        SvStats {
            nig: s.nig.update(&Vector2::new(1.0, x_prev), x),
            a_mu: b_mu * (s.a_mu / s.b_mu + prec * y),
            b_mu,
        }
    }

    fn batch_posterior(&self, states: &[f64], ys: &[f64]) -> Result<SvStats> {
        check_path(states, ys)?;
        let fs: Vec<_> = states[..ys.len()].iter().map(|&x| Vector2::new(1.0, x)).collect();
        let nig = self.prior.nig.batch(&fs, &states[1..])?;
        let (mut prec, mut weighted) = (1.0 / self.prior.b_mu, self.prior.a_mu / self.prior.b_mu);
        for (x, y) in states[1..].iter().zip(ys) {
            prec += (-x).exp();
            weighted += (-x).exp() * y;
        }
        Ok(SvStats { nig, a_mu: weighted / prec, b_mu: 1.0 / prec })
    }

    fn sample_params(&self, s: &SvStats, rng: &mut Rng) -> SvParams {
        let (coef, w) = s.nig.sample(rng);
        let mu = s.a_mu + s.b_mu.sqrt() * stats::std_normal(rng);
        SvParams { mu, alpha: coef[0], beta: coef[1], w }
    }

    fn stats_values(&self, s: &SvStats) -> Vec<(&'static str, f64)> {
        let mut out = Vec::with_capacity(10);
        s.nig.push_values(&["m", "C", "n", "d"], &mut out);
        out.push(("a_mu", s.a_mu));
        out.push(("b_mu", s.b_mu));
        out
    }

    fn stats_valid(&self, s: &SvStats) -> bool {
        s.nig.is_valid() && s.b_mu > 0.0 && s.a_mu.is_finite()
    }

    fn linear_transition(&self, p: &SvParams, _t: usize) -> Option<LinearTransition> {
        Some(LinearTransition { intercept: p.alpha, g: p.beta, w: p.w })
    }

    /// Log squared demeaned returns, floored at a tenth of the sample variance.
    fn crude_states(&self, ys: &[f64]) -> Vec<f64> {
        let (m, v) = stats::mean_var(ys);
        ys.iter().map(|y| ((y - m).powi(2) + 0.1 * v).ln()).collect()
    }

    fn generating_params(&self) -> SvParams {
        SvParams { mu: 0.0, alpha: -0.5, beta: 0.95, w: 0.05 }
    }

    fn set_hyper(&mut self, key: &str, values: &[f64]) -> Result<()> {
        let bad = || Error::Parse(format!("bad value count for sv hyperparameter `{key}`"));
        match (key, values) {
            ("a0", [v]) => self.prior.a_mu = *v,
            ("b0", [v]) => self.prior.b_mu = *v,
            ("m0", [a, b]) => self.prior.nig.b = Vector2::new(*a, *b),
            ("C0", [a, b]) => self.prior.nig.prec = Matrix2::new(*a, 0.0, 0.0, *b),
            ("C0", [a, b, c, d]) => self.prior.nig.prec = Matrix2::new(*a, *b, *c, *d),
            ("n0", [v]) => self.prior.nig.n = *v,
            ("d0", [v]) => self.prior.nig.d = *v,
            ("x0", [v]) => self.x0 = InitialState::Fixed(*v),
            ("a0" | "b0" | "m0" | "C0" | "n0" | "d0" | "x0", _) => return Err(bad()),
            _ => return Err(Error::Parse(format!("unknown sv hyperparameter `{key}`"))),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn observation_is_normal_with_log_variance_state() {
        let m = StochasticVolatility::default();
        let p = SvParams { mu: 0.01, alpha: 0.0, beta: 0.9, w: 0.1 };
        let (y, x) = (0.03f64, -2.0f64);
        let direct = stats::normal_logpdf(y, p.mu, x.exp());
        assert!((m.observation_logpdf(y, x, &p) - direct).abs() < 1e-12);
    }

    #[test]
    fn linear_transition_matches_generic_density() {
        let m = StochasticVolatility::default();
        let p = SvParams { mu: 0.0, alpha: -0.4, beta: 0.96, w: 0.03 };
        let lt = m.linear_transition(&p, 1).unwrap();
        let (x, xp) = (-9.7, -10.1);
        let a = stats::normal_logpdf(x, lt.intercept + lt.g * xp, lt.w);
        assert!((a - m.transition_logpdf(x, xp, 1, &p)).abs() < 1e-12);
    }
}
