use nalgebra::{Matrix3, Vector3};

use super::{check_path, param_vector, InitialState, Nig, StateSpaceModel};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::stats;

param_vector!(
    /// Regression coefficients, evolution variance, observation variance.
    GrowthParams { alpha: Real, beta: Real, gamma: Real, w: Positive, v: Positive }
);

/// `((alpha, beta, gamma)', W) ~ NIG(b, B, n, d)`, `V ~ IG(nu, delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthStats {
    pub nig: Nig<3>,
    pub nu: f64,
    pub delta: f64,
}

/// Nonstationary growth model:
/// `x_t = alpha x + beta x/(1+x^2) + gamma cos(1.2(t-1)) + N(0, W)` with
/// `x = x_{t-1}`, and `y_t = x_t^2/20 + N(0, V)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Growth {
    pub prior: GrowthStats,
    pub x0: InitialState,
}

impl Default for Growth {
    fn default() -> Self {
        Growth {
            prior: GrowthStats {
                nig: Nig::new(
                    Vector3::new(0.5, 25.0, 8.0),
                    Matrix3::from_diagonal(&Vector3::new(1.0 / 0.0625, 1.0 / 100.0, 1.0 / 16.0)),
                    2.0,
                    2.0,
                ),
                nu: 2.0,
                delta: 2.0,
            },
            x0: InitialState::Fixed(0.0),
        }
    }
}

/// Regressor `F_t = (x, x/(1+x^2), cos(1.2(t-1)))`.
#[inline]
pub(crate) fn regressor(x_prev: f64, t: usize) -> Vector3<f64> {
    Vector3::new(x_prev, x_prev / (1.0 + x_prev * x_prev), (1.2 * (t as f64 - 1.0)).cos())
}

impl StateSpaceModel for Growth {
    type Params = GrowthParams;
    type Stats = GrowthStats;

    fn name(&self) -> &'static str {
        "growth"
    }

    fn initial_state(&self) -> InitialState {
        self.x0
    }

    fn prior(&self) -> GrowthStats {
        self.prior
    }

    #[inline]
    fn transition_mean(&self, x_prev: f64, t: usize, p: &GrowthParams) -> f64 {
        p.alpha * x_prev
            + p.beta * x_prev / (1.0 + x_prev * x_prev)
            + p.gamma * (1.2 * (t as f64 - 1.0)).cos()
    }

    #[inline]
    fn transition_var(&self, p: &GrowthParams) -> f64 {
        p.w
    }

    #[inline]
    fn observation_logpdf(&self, y: f64, x: f64, p: &GrowthParams) -> f64 {
        stats::normal_logpdf(y, x * x / 20.0, p.v)
    }

    fn sample_observation(&self, x: f64, p: &GrowthParams, rng: &mut Rng) -> f64 {
        x * x / 20.0 + p.v.sqrt() * stats::std_normal(rng)
    }

    #[inline]
    fn update_stats(&self, s: &GrowthStats, x_prev: f64, x: f64, y: f64, t: usize) -> GrowthStats {
        let e = y - x * x / 20.0;
        GrowthStats {
            nig: s.nig.update(&regressor(x_prev, t), x),
            nu: s.nu + 0.5,
            delta: s.delta + e * e / 2.0,
        }
    }

    fn batch_posterior(&self, states: &[f64], ys: &[f64]) -> Result<GrowthStats> {
        check_path(states, ys)?;
        let fs: Vec<_> = (1..states.len()).map(|t| regressor(states[t - 1], t)).collect();
        let nig = self.prior.nig.batch(&fs, &states[1..])?;
        let sse: f64 = ys
            .iter()
            .zip(&states[1..])
            .map(|(y, x)| (y - x * x / 20.0).powi(2))
            .sum();
        Ok(GrowthStats {
            nig,
            nu: self.prior.nu + 0.5 * ys.len() as f64,
            delta: self.prior.delta + sse / 2.0,
        })
    }

    fn sample_params(&self, s: &GrowthStats, rng: &mut Rng) -> GrowthParams {
        let (beta, w) = s.nig.sample(rng);
        let v = stats::inv_gamma(rng, s.nu, s.delta);
        GrowthParams { alpha: beta[0], beta: beta[1], gamma: beta[2], w, v }
    }

    fn stats_values(&self, s: &GrowthStats) -> Vec<(&'static str, f64)> {
        let mut out = Vec::with_capacity(16);
        s.nig.push_values(&["b", "B", "n", "d"], &mut out);
        out.push(("nu", s.nu));
        out.push(("delta", s.delta));
        out
    }

    fn stats_valid(&self, s: &GrowthStats) -> bool {
        s.nig.is_valid() && s.nu > 0.0 && s.delta > 0.0 && s.delta.is_finite()
    }

    /// `sqrt(20 max(y, 0))`; the sign of the state is not identified by `y`.
    fn crude_states(&self, ys: &[f64]) -> Vec<f64> {
        ys.iter().map(|y| (20.0 * y.max(0.0)).sqrt()).collect()
    }

    fn generating_params(&self) -> GrowthParams {
        GrowthParams { alpha: 0.5, beta: 25.0, gamma: 8.0, w: 1.0, v: 5.0 }
    }

    fn set_hyper(&mut self, key: &str, values: &[f64]) -> Result<()> {
        let bad = || Error::Parse(format!("bad value count for growth hyperparameter `{key}`"));
        match (key, values) {
            ("b0", [a, b, c]) => self.prior.nig.b = Vector3::new(*a, *b, *c),
            ("B0", [a, b, c]) => self.prior.nig.prec = Matrix3::from_diagonal(&Vector3::new(*a, *b, *c)),
            ("B0", v) if v.len() == 9 => self.prior.nig.prec = Matrix3::from_row_slice(v),
            ("n0", [v]) => self.prior.nig.n = *v,
            ("d0", [v]) => self.prior.nig.d = *v,
            ("nu0", [v]) => self.prior.nu = *v,
            ("delta0", [v]) => self.prior.delta = *v,
            ("x0", [v]) => self.x0 = InitialState::Fixed(*v),
            ("b0" | "B0" | "n0" | "d0" | "nu0" | "delta0" | "x0", _) => return Err(bad()),
            _ => return Err(Error::Parse(format!("unknown growth hyperparameter `{key}`"))),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_transition_mean_is_gamma() {
        let m = Growth::default();
        let p = m.generating_params();
        assert_eq!(m.transition_mean(0.0, 1, &p), 8.0);
    }

    #[test]
    fn recursion_matches_batch_on_a_short_path() {
        let m = Growth::default();
        let states = [0.0, 3.0, -7.5, 12.0, 0.4];
        let ys = [0.2, 3.1, 6.0, -1.0];
        let it = crate::model::iterate_suffstats(&m, &states, &ys).unwrap();
        let b = m.batch_posterior(&states, &ys).unwrap();
        for ((_, a), (_, c)) in m.stats_values(&it).iter().zip(m.stats_values(&b)) {
            assert!((a - c).abs() <= 1e-10 * c.abs().max(1.0), "{a} vs {c}");
        }
    }
}
