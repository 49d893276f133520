//! Paired significance tests across replications.

use serde::Serialize;
use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignTest {
    /// Pairs with `a > b`.
    pub positive: usize,
    /// Pairs with `a < b`.
    pub negative: usize,
    /// Exact two-sided binomial p-value; ties are dropped.
    pub p_value: f64,
}

pub fn sign_test(a: &[f64], b: &[f64]) -> SignTest {
    let positive = a.iter().zip(b).filter(|(x, y)| x > y).count();
    let negative = a.iter().zip(b).filter(|(x, y)| x < y).count();
    let n = positive + negative;
    let p_value = if n == 0 {
        1.0
    } else {
        let k = positive.min(negative) as u64;
        let bin = Binomial::new(0.5, n as u64).expect("valid binomial");
        (2.0 * bin.cdf(k)).min(1.0)
    };
    SignTest { positive, negative, p_value }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedT {
    pub mean_diff: f64,
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p_value: f64,
}

pub fn paired_t_test(a: &[f64], b: &[f64]) -> PairedT {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let df = n - 1.0;
    if d.len() < 2 {
        return PairedT { mean_diff: mean, t: f64::NAN, df, p_value: 1.0 };
    }
    if var == 0.0 {
        let p_value = if mean == 0.0 { 1.0 } else { 0.0 };
        return PairedT { mean_diff: mean, t: mean.signum() * f64::INFINITY, df, p_value };
    }
    let t = mean / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive df");
    PairedT { mean_diff: mean, t, df, p_value: 2.0 * (1.0 - dist.cdf(t.abs())) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sign_test_matches_hand_binomial() {
        // 9 of 10 positive: P(X <= 1) = 11/1024
        let a = [1.0; 10];
        let mut b = [0.0; 10];
        b[0] = 2.0;
        let s = sign_test(&a, &b);
        assert_eq!((s.positive, s.negative), (9, 1));
        assert!((s.p_value - 22.0 / 1024.0).abs() < 1e-12);
    }

    #[test]
    fn ties_are_dropped_and_balance_gives_one() {
        let s = sign_test(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0, 4.0, 4.0]);
        assert_eq!((s.positive, s.negative), (1, 1));
        assert!((s.p_value - 1.0).abs() < 1e-12);
        assert_eq!(sign_test(&[1.0], &[1.0]).p_value, 1.0);
    }

    #[test]
    fn paired_t_known_value() {
        // differences 1, 2, 3: mean 2, sd 1, t = 2 sqrt(3), df 2
        let r = paired_t_test(&[2.0, 4.0, 6.0], &[1.0, 2.0, 3.0]);
        assert!((r.t - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        // two-sided p for t = 3.4641 on 2 df
        assert!((r.p_value - 0.07418).abs() < 1e-4, "{}", r.p_value);
    }

    proptest! {
        #[test]
        fn p_values_are_probabilities_and_symmetric(
            pairs in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 2..60),
        ) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let s = sign_test(&a, &b);
            let s2 = sign_test(&b, &a);
            prop_assert!((0.0..=1.0).contains(&s.p_value));
            prop_assert!((s.p_value - s2.p_value).abs() < 1e-12);
            let t = paired_t_test(&a, &b);
            prop_assert!((0.0..=1.0).contains(&t.p_value));
            prop_assert!((t.p_value - paired_t_test(&b, &a).p_value).abs() < 1e-12);
        }
    }
}
