use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::stats;

/// Normal-inverse-gamma hyperparameters for a regression `z = F' beta + e`,
/// `e ~ N(0, sigma2)`, with `K` regressors.
///
/// `prec` is the precision-scale matrix `B`: `beta | sigma2 ~ N(b, sigma2 B^-1)`
/// and `sigma2 ~ IG(n, d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nig<const K: usize> {
    pub b: SVector<f64, K>,
    pub prec: SMatrix<f64, K, K>,
    pub n: f64,
    pub d: f64,
}

impl<const K: usize> Nig<K> {
    pub fn new(b: SVector<f64, K>, prec: SMatrix<f64, K, K>, n: f64, d: f64) -> Self {
        Nig { b, prec, n, d }
    }

    /// One observation `(f, z)`:
    /// `B' = B + f f'`, `b' = B'^-1 (B b + f z)`, `n' = n + 1/2`,
    /// `d' = d + (b' B b + z^2 - b'' B' b')/2`.
    #[inline]
    pub fn update(&self, f: &SVector<f64, K>, z: f64) -> Self {
        let prec = self.prec + f * f.transpose();
        let rhs = self.prec * self.b + f * z;
        let b = solve_spd(&prec, &rhs);
        let before = self.b.dot(&(self.prec * self.b));
        let after = b.dot(&(prec * b));
        Nig {
            b,
            prec,
            n: self.n + 0.5,
            d: self.d + (before + z * z - after) / 2.0,
        }
    }

    /// Posterior after all observations at once, from the regression sums
    /// `sum f f'`, `sum f z`, `sum z^2`.
    pub fn batch(&self, fs: &[SVector<f64, K>], zs: &[f64]) -> Result<Self> {
        if fs.len() != zs.len() {
            return Err(Error::Shape(format!("{} regressors vs {} responses", fs.len(), zs.len())));
        }
        let mut ff = SMatrix::<f64, K, K>::zeros();
        let mut fz = SVector::<f64, K>::zeros();
        let mut zz = 0.0;
        for (f, &z) in fs.iter().zip(zs) {
            ff += f * f.transpose();
            fz += f * z;
            zz += z * z;
        }
        let prec = self.prec + ff;
        let b = solve_spd(&prec, &(self.prec * self.b + fz));
        let n = self.n + 0.5 * zs.len() as f64;
        let d = self.d + (self.b.dot(&(self.prec * self.b)) + zz - b.dot(&(prec * b))) / 2.0;
        Ok(Nig { b, prec, n, d })
    }

    /// Draws `(beta, sigma2)`.
    pub fn sample(&self, rng: &mut Rng) -> (SVector<f64, K>, f64) {
        let sigma2 = stats::inv_gamma(rng, self.n, self.d);
        let z = SVector::<f64, K>::from_fn(|_, _| stats::std_normal(rng));
        let beta = if K == 1 {
            self.b + z * (sigma2 / self.prec[(0, 0)]).sqrt()
        } else {
            let chol = self.prec.cholesky().expect("NIG precision must be positive definite");
            // L' u = z gives u ~ N(0, (L L')^-1).
            let u = chol
                .l()
                .transpose()
                .solve_upper_triangular(&z)
                .expect("triangular factor is non-singular");
            self.b + u * sigma2.sqrt()
        };
        (beta, sigma2)
    }

    pub fn is_valid(&self) -> bool {
        self.n > 0.0
            && self.d > 0.0
            && self.d.is_finite()
            && self.b.iter().all(|v| v.is_finite())
            && self.prec.cholesky().is_some()
    }

    pub(crate) fn push_values(&self, prefix: &[&'static str; 4], out: &mut Vec<(&'static str, f64)>) {
        for v in self.b.iter() {
            out.push((prefix[0], *v));
        }
        for v in self.prec.iter() {
            out.push((prefix[1], *v));
        }
        out.push((prefix[2], self.n));
        out.push((prefix[3], self.d));
    }
}

#[inline]
fn solve_spd<const K: usize>(a: &SMatrix<f64, K, K>, rhs: &SVector<f64, K>) -> SVector<f64, K> {
    if K == 1 {
        return rhs / a[(0, 0)];
    }
    match a.cholesky() {
        Some(c) => c.solve(rhs),
        None => SVector::from_element(f64::NAN),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;
    use nalgebra::{Matrix2, Vector2};

    #[test]
    fn sequential_matches_batch_in_two_dimensions() {
        let prior = Nig::new(Vector2::new(0.0, 0.9), Matrix2::identity(), 2.0, 2.0);
        let fs: Vec<_> = (0..30).map(|i| Vector2::new(1.0, (i as f64 * 0.37).sin())).collect();
        let zs: Vec<f64> = (0..30).map(|i| (i as f64 * 0.11).cos()).collect();
        let mut s = prior;
        for (f, &z) in fs.iter().zip(&zs) {
            s = s.update(f, z);
        }
        let b = prior.batch(&fs, &zs).unwrap();
        assert!((s.b - b.b).norm() < 1e-12);
        assert!((s.prec - b.prec).norm() < 1e-12);
        assert!((s.d - b.d).abs() < 1e-10 * b.d);
        assert_eq!(s.n, b.n);
    }

    #[test]
    fn coefficient_draws_have_prior_covariance() {
        // beta | sigma2 ~ N(b, sigma2 B^-1); with n large sigma2 ~ d/(n-1).
        let prec = Matrix2::new(4.0, 1.0, 1.0, 2.0);
        let prior = Nig::new(Vector2::new(1.0, -1.0), prec, 2000.0, 1999.0);
        let mut rng = Seed(3).stream(0, 0, 0);
        let n = 100_000;
        let draws: Vec<_> = (0..n).map(|_| prior.sample(&mut rng).0).collect();
        let mean = draws.iter().fold(Vector2::zeros(), |a, d| a + d) / n as f64;
        let cov = draws
            .iter()
            .fold(Matrix2::zeros(), |a, d| a + (d - mean) * (d - mean).transpose())
            / n as f64;
        let expected = prec.try_inverse().unwrap();
        assert!((mean - Vector2::new(1.0, -1.0)).norm() < 0.01);
        assert!((cov - expected).norm() < 0.01, "{cov} vs {expected}");
    }
}
