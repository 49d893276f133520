//! Small numeric helpers shared across the crate.

use rand::Rng as _;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::rng::Rng;

pub const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// `log(sum(exp(v)))`, stable for large magnitudes. Returns `-inf` when every
/// entry is `-inf` (or the slice is empty) and NaN if any entry is NaN.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return if v.iter().any(|x| x.is_nan()) { f64::NAN } else { f64::NEG_INFINITY };
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = v.iter().map(|&x| (x - max).exp()).sum();
    max + s.ln()
}

/// Normalized weights from log weights. Returns `None` if no weight is positive
/// and finite.
pub fn normalized_weights(log_w: &[f64]) -> Option<Vec<f64>> {
    let mut out = vec![0.0; log_w.len()];
    normalize_into(log_w, &mut out).then_some(out)
}

/// Writes normalized weights into `out`; false if the weights are degenerate.
pub fn normalize_into(log_w: &[f64], out: &mut [f64]) -> bool {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return false;
    }
    let mut total = 0.0;
    for (o, &l) in out.iter_mut().zip(log_w) {
        let w = if l.is_nan() { 0.0 } else { (l - max).exp() };
        *o = w;
        total += w;
    }
    if !(total > 0.0) || !total.is_finite() {
        return false;
    }
    let inv = 1.0 / total;
    out.iter_mut().for_each(|w| *w *= inv);
    true
}

/// Effective sample size `1 / sum(w_i^2)` of normalized weights.
pub fn ess(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

#[inline]
pub fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (LN_2PI + var.ln() + d * d / var)
}

/// Poisson log-pmf at a non-negative integer `k` with rate `lambda`.
#[inline]
pub fn poisson_logpmf(k: f64, lambda: f64) -> f64 {
    if k == 0.0 {
        return -lambda;
    }
    k * lambda.ln() - lambda - statrs::function::gamma::ln_gamma(k + 1.0)
}

#[inline]
pub fn std_normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Gamma draw with the given shape and rate.
pub fn gamma(rng: &mut Rng, shape: f64, rate: f64) -> f64 {
    // Gamma::new only fails on non-positive or non-finite inputs, which the
    // sufficient-statistic invariants rule out.
    Gamma::new(shape, 1.0 / rate)
        .expect("gamma shape and rate must be positive")
        .sample(rng)
}

/// Inverse-gamma draw with shape `shape` and scale `scale` (mean `scale/(shape-1)`).
pub fn inv_gamma(rng: &mut Rng, shape: f64, scale: f64) -> f64 {
    1.0 / gamma(rng, shape, scale)
}

#[inline]
pub fn uniform(rng: &mut Rng) -> f64 {
    rng.random::<f64>()
}

/// Weighted mean and variance (weights need not be normalized).
pub fn weighted_mean_var(x: &[f64], w: &[f64]) -> (f64, f64) {
    let total: f64 = w.iter().sum();
    let shift = x.first().copied().unwrap_or(0.0);
    let mut m = 0.0;
    for (&xi, &wi) in x.iter().zip(w) {
        m += wi * (xi - shift);
    }
    m /= total;
    let mut v = 0.0;
    for (&xi, &wi) in x.iter().zip(w) {
        let d = xi - shift - m;
        v += wi * d * d;
    }
    (shift + m, v / total)
}

pub fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|xi| (xi - m) * (xi - m)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, v)
}

/// Empirical quantile with linear interpolation; `sorted` must be ascending.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Weighted quantile of `x` under weights `w` (normalized or not).
pub fn weighted_quantile(x: &[f64], w: &[f64], q: f64) -> f64 {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let total: f64 = w.iter().sum();
    let target = q * total;
    let mut acc = 0.0;
    for &i in &idx {
        acc += w[i];
        if acc >= target {
            return x[i];
        }
    }
    idx.last().map(|&i| x[i]).unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[-1000.0, -1000.0]) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!((log_sum_exp(&[0.0]) - 0.0).abs() < 1e-15);
        assert!(log_sum_exp(&[f64::NAN, f64::NEG_INFINITY]).is_nan());
    }

    #[test]
    fn normalization_sums_to_one() {
        let w = normalized_weights(&[-800.0, -801.0, f64::NEG_INFINITY, -799.5]).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(w[2], 0.0);
        assert!(normalized_weights(&[f64::NEG_INFINITY, f64::NEG_INFINITY]).is_none());
    }

    #[test]
    fn poisson_at_zero_is_minus_rate() {
        assert_eq!(poisson_logpmf(0.0, 3.7), -3.7);
        // P(3; 2) = e^-2 2^3 / 6
        let p = (-2.0f64).exp() * 8.0 / 6.0;
        assert!((poisson_logpmf(3.0, 2.0) - p.ln()).abs() < 1e-12);
    }

    #[test]
    fn quantiles() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&s, 0.5), 3.0);
        assert_eq!(quantile_sorted(&s, 0.25), 2.0);
        assert_eq!(weighted_quantile(&[3.0, 1.0, 2.0], &[1.0, 1.0, 1.0], 0.5), 2.0);
    }
}
