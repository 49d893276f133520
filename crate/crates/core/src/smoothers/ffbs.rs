use crate::error::{Error, Result};
use crate::filters::{GaussianMoments, LinearSystem};
use crate::rng::Rng;
use crate::stats;

/// Forward-filtering backward-sampling: an exact draw from `p(x^T | y^T)` for
/// a linear-Gaussian system, given its Kalman moments.
///
/// `x_T ~ N(m_T, C_T)`, then for `t = T-1..1`,
/// `x_t ~ N(m_t + B_t (x_{t+1} - a_{t+1}), C_t - B_t^2 R_{t+1})` with
/// `B_t = C_t G_{t+1} / R_{t+1}`.
pub fn ffbs_draw(sys: &LinearSystem, moments: &GaussianMoments, rng: &mut Rng) -> Result<Vec<f64>> {
    let n = moments.len();
    if n == 0 {
        return Err(Error::Shape("no moments to sample from".into()));
    }
    let mut path = vec![0.0; n];
    path[n - 1] = moments.m[n - 1] + moments.c[n - 1].sqrt() * stats::std_normal(rng);
    for t in (0..n - 1).rev() {
        let r_next = moments.r[t + 1];
        if !(r_next > 0.0) || !r_next.is_finite() {
            return Err(Error::Numerical { t: t + 1, what: format!("singular prior variance R = {r_next}") });
        }
        let b = moments.c[t] * sys.transitions[t + 1].g / r_next;
        let h = moments.m[t] + b * (path[t + 1] - moments.a[t + 1]);
        let var = (moments.c[t] - b * b * r_next).max(0.0);
        path[t] = h + var.sqrt() * stats::std_normal(rng);
    }
    Ok(path)
}
