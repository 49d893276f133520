use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResamplingScheme {
    Multinomial,
    #[default]
    Systematic,
    Stratified,
}

impl std::str::FromStr for ResamplingScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multinomial" => Ok(ResamplingScheme::Multinomial),
            "systematic" => Ok(ResamplingScheme::Systematic),
            "stratified" => Ok(ResamplingScheme::Stratified),
            _ => Err(Error::Parse(format!("unknown resampling scheme `{s}`"))),
        }
    }
}

/// Draws `log_weights.len()` ancestor indices.
pub fn resample(log_weights: &[f64], scheme: ResamplingScheme, rng: &mut Rng) -> Result<Vec<usize>> {
    resample_n(log_weights, scheme, log_weights.len(), rng)
}

/// Draws `n_out` ancestor indices; the count of index `i` has expectation
/// `n_out * w_i` under every scheme. Output is sorted ascending.
pub fn resample_n(log_weights: &[f64], scheme: ResamplingScheme, n_out: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    let w = stats::normalized_weights(log_weights).ok_or(Error::DegenerateWeights { t: 0, theta: None })?;
    let mut out = Vec::with_capacity(n_out);
    let n = n_out as f64;
    match scheme {
        ResamplingScheme::Multinomial => {
            // Sorted uniforms via normalized exponential spacings.
            let mut e: Vec<f64> = (0..=n_out).map(|_| -(1.0 - stats::uniform(rng)).ln()).collect();
            let total: f64 = e.iter().sum();
            let mut acc = 0.0;
            for v in e.iter_mut().take(n_out) {
                acc += *v;
                *v = acc / total;
            }
            walk_cdf(&w, e[..n_out].iter().copied(), &mut out);
        }
        ResamplingScheme::Systematic => {
            let u = stats::uniform(rng);
            walk_cdf(&w, (0..n_out).map(|k| (k as f64 + u) / n), &mut out);
        }
        ResamplingScheme::Stratified => {
            let us: Vec<f64> = (0..n_out).map(|k| (k as f64 + stats::uniform(rng)) / n).collect();
            walk_cdf(&w, us.into_iter(), &mut out);
        }
    }
    Ok(out)
}

/// Maps ascending points in [0, 1) to indices through the weight CDF.
fn walk_cdf(w: &[f64], points: impl Iterator<Item = f64>, out: &mut Vec<usize>) {
    let last = w.iter().rposition(|&x| x > 0.0).unwrap_or(0);
    let mut i = 0;
    let mut cdf = w[0];
    for u in points {
        while u >= cdf && i < last {
            i += 1;
            cdf += w[i];
        }
        out.push(i);
    }
}

/// Draws one index with probability proportional to `exp(log_weights)`.
/// `scratch` is reused between calls.
pub fn sample_index(log_weights: &[f64], scratch: &mut Vec<f64>, rng: &mut Rng) -> Option<usize> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    scratch.clear();
    let mut total = 0.0;
    for &l in log_weights {
        total += (l - max).exp();
        scratch.push(total);
    }
    let u = stats::uniform(rng) * total;
    let idx = scratch.partition_point(|&c| c <= u);
    Some(idx.min(log_weights.len() - 1))
}
