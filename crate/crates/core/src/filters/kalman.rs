use crate::error::{Error, Result};
use crate::model::{LinearObservation, LinearTransition, StateSpaceModel};
use crate::stats;

/// A scalar linear-Gaussian system with time-varying transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    /// Transition into `x_t`, indexed by `t - 1`.
    pub transitions: Vec<LinearTransition>,
    pub observation: LinearObservation,
    pub m0: f64,
    pub c0: f64,
}

impl LinearSystem {
    /// Coefficients of `model` at `params` over `t_len` steps; `None` if the
    /// model is not linear-Gaussian.
    pub fn from_model<M: StateSpaceModel>(model: &M, params: &M::Params, t_len: usize) -> Option<Self> {
        let observation = model.linear_observation(params)?;
        let transitions = (1..=t_len)
            .map(|t| model.linear_transition(params, t))
            .collect::<Option<Vec<_>>>()?;
        let init = model.initial_state();
        Some(LinearSystem { transitions, observation, m0: init.mean(), c0: init.var() })
    }
}

/// Kalman prior moments `(a_t, R_t)` and posterior moments `(m_t, C_t)` for
/// `t = 1..T`, plus the exact log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMoments {
    pub a: Vec<f64>,
    pub r: Vec<f64>,
    pub m: Vec<f64>,
    pub c: Vec<f64>,
    /// Per-step prediction-error log-densities `log p(y_t | y^{t-1})`.
    pub log_predictive: Vec<f64>,
    pub log_likelihood: f64,
}

impl GaussianMoments {
    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }
}

pub fn kalman_filter(sys: &LinearSystem, ys: &[f64]) -> Result<GaussianMoments> {
    if sys.transitions.len() < ys.len() {
        return Err(Error::Shape(format!(
            "{} transitions for {} observations",
            sys.transitions.len(),
            ys.len()
        )));
    }
    let n = ys.len();
    let mut out = GaussianMoments {
        a: Vec::with_capacity(n),
        r: Vec::with_capacity(n),
        m: Vec::with_capacity(n),
        c: Vec::with_capacity(n),
        log_predictive: Vec::with_capacity(n),
        log_likelihood: 0.0,
    };
    let LinearObservation { f, v } = sys.observation;
    let (mut m, mut c) = (sys.m0, sys.c0);
    for (k, (&y, tr)) in ys.iter().zip(&sys.transitions).enumerate() {
        let t = k + 1;
        let a = tr.intercept + tr.g * m;
        let r = tr.g * tr.g * c + tr.w;
        let q = f * f * r + v;
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::Numerical { t, what: format!("innovation variance {q}") });
        }
        let gain = r * f / q;
        let e = y - f * a;
        m = a + gain * e;
        c = (r - gain * f * r).max(0.0);
        let lp = stats::normal_logpdf(y, f * a, q);
        out.log_likelihood += lp;
        out.log_predictive.push(lp);
        out.a.push(a);
        out.r.push(r);
        out.m.push(m);
        out.c.push(c);
    }
    Ok(out)
}

/// Marginal smoothing means and variances `E[x_t | y^T]`, `V[x_t | y^T]`
/// (Rauch-Tung-Striebel).
pub fn rts_smoother(sys: &LinearSystem, moments: &GaussianMoments) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = moments.len();
    let mut ms = moments.m.clone();
    let mut vs = moments.c.clone();
    for t in (0..n.saturating_sub(1)).rev() {
        let r_next = moments.r[t + 1];
        if !(r_next > 0.0) {
            return Err(Error::Numerical { t: t + 1, what: format!("singular prior variance R = {r_next}") });
        }
        let b = moments.c[t] * sys.transitions[t + 1].g / r_next;
        ms[t] = moments.m[t] + b * (ms[t + 1] - moments.a[t + 1]);
        vs[t] = moments.c[t] + b * b * (vs[t + 1] - r_next);
    }
    Ok((ms, vs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn system(g: f64, w: f64, v: f64, m0: f64, c0: f64, n: usize) -> LinearSystem {
        LinearSystem {
            transitions: vec![LinearTransition { intercept: 0.0, g, w }; n],
            observation: LinearObservation { f: 1.0, v },
            m0,
            c0,
        }
    }

    #[test]
    fn one_step_by_hand() {
        let k = kalman_filter(&system(1.0, 1.0, 1.0, 0.0, 1.0, 1), &[0.0]).unwrap();
        assert_eq!(k.a[0], 0.0);
        assert_eq!(k.r[0], 2.0);
        assert_eq!(k.m[0], 0.0);
        assert!((k.c[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn no_noise_and_no_information_decays_geometrically() {
        let ys = [5.0, -3.0, 8.0, 1.0];
        let k = kalman_filter(&system(0.8, 0.0, 1e300, 2.0, 0.5, 4), &ys).unwrap();
        for (t, m) in k.m.iter().enumerate() {
            assert!((m - 2.0 * 0.8f64.powi(t as i32 + 1)).abs() < 1e-12);
        }
    }

    #[test]
    fn prior_variance_recursion_holds() {
        let ys = [0.3, 1.2, -0.7, 2.0, 0.1];
        let sys = system(0.75, 1.0, 1.0, 0.0, 0.0, 5);
        let k = kalman_filter(&sys, &ys).unwrap();
        for t in 0..4 {
            assert!((k.r[t + 1] - (0.75 * 0.75 * k.c[t] + 1.0)).abs() < 1e-14);
            assert!(k.r[t] >= k.c[t]);
        }
    }

    #[test]
    fn zero_innovation_variance_is_an_error() {
        let err = kalman_filter(&system(1.0, 0.0, 0.0, 0.0, 0.0, 2), &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::Numerical { t: 1, .. }));
    }
}
