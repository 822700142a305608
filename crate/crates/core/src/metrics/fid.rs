use num_traits::Float;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::linalg::{sqrt_psd, symmetric_eigen, Matrix};
use crate::error::MetricsError;
use crate::util::rng_from;

/// Pre-clamp values down to this far below zero are rounding noise.
pub const NEGATIVE_SLACK: f64 = 1e-6;

/// Mean vector and covariance of a feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMoments<T> {
    pub mu: Vec<T>,
    pub sigma: Matrix<T>,
    pub n_samples: usize,
}

impl<T: Float> FeatureMoments<T> {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Moments with a diagonal covariance, mostly for tests and fixtures.
    pub fn diagonal(mu: Vec<T>, variances: &[T]) -> Self {
        Self { sigma: Matrix::from_diagonal(variances), mu, n_samples: 0 }
    }
}

/// Sum in a fixed pairwise order, so results do not depend on threading.
fn pairwise_sum<T: Float>(v: &[T]) -> T {
    match v.len() {
        0 => T::zero(),
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// Sample mean and unbiased covariance (divisor n - 1), symmetrised.
pub fn feature_moments<T: Float>(features: &[Vec<T>]) -> Result<FeatureMoments<T>, MetricsError> {
    if features.len() < 2 {
        return Err(MetricsError::Domain(format!("need at least 2 feature vectors, got {}", features.len())));
    }
    let d = features[0].len();
    if let Some(bad) = features.iter().find(|f| f.len() != d) {
        return Err(MetricsError::Extractor(format!("feature length {} differs from {d}", bad.len())));
    }
    if features.iter().flatten().any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite("features"));
    }
    let n = T::from(features.len()).expect("count fits");
    let mu: Vec<T> = (0..d).map(|j| pairwise_sum(&features.iter().map(|f| f[j]).collect::<Vec<_>>()) / n).collect();
    let centered: Vec<Vec<T>> = features.iter().map(|f| f.iter().zip(&mu).map(|(x, m)| *x - *m).collect()).collect();
    let mut sigma = Matrix::zeros(d);
    for i in 0..d {
        for j in 0..=i {
            let prods: Vec<T> = centered.iter().map(|c| c[i] * c[j]).collect();
            let v = pairwise_sum(&prods) / (n - T::one());
            sigma[(i, j)] = v;
            sigma[(j, i)] = v;
        }
    }
    Ok(FeatureMoments { mu, sigma: sigma.symmetrized(), n_samples: features.len() })
}

/// Fréchet distance between two Gaussians:
/// `|mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a S_b)^(1/2))`.
///
/// The cross term is computed as the trace of `(√S_a S_b √S_a)^(1/2)`, which
/// is symmetric and so safe to take apart with the Jacobi solver.
pub fn fid_from_moments<T: Float>(a: &FeatureMoments<T>, b: &FeatureMoments<T>) -> Result<T, MetricsError> {
    if a.dim() != b.dim() || a.sigma.dim() != a.dim() || b.sigma.dim() != b.dim() {
        return Err(MetricsError::Domain(format!("dimension mismatch: {} vs {}", a.dim(), b.dim())));
    }
    if a.mu.iter().chain(&b.mu).any(|v| !v.is_finite()) || !a.sigma.is_finite() || !b.sigma.is_finite() {
        return Err(MetricsError::NonFinite("moments"));
    }
    let mean_term = a.mu.iter().zip(&b.mu).fold(T::zero(), |acc, (x, y)| acc + (*x - *y) * (*x - *y));
    let root_a = sqrt_psd(&a.sigma);
    let inner = root_a.matmul(&b.sigma).matmul(&root_a).symmetrized();
    let (vals, _) = symmetric_eigen(&inner);
    let cross = vals.iter().fold(T::zero(), |acc, &l| acc + l.max(T::zero()).sqrt());
    let two = T::one() + T::one();
    let value = mean_term + a.sigma.trace() + b.sigma.trace() - two * cross;
    if !value.is_finite() {
        return Err(MetricsError::NonFinite("fid"));
    }
    if value < T::zero() {
        let slack = T::from(NEGATIVE_SLACK).expect("representable");
        if value < -slack {
            log::warn!("fid pre-clamp value {} below -{NEGATIVE_SLACK}", value.to_f64().unwrap_or(f64::NAN));
        }
        return Ok(T::zero());
    }
    Ok(value)
}

pub fn fid_from_features<T: Float>(a: &[Vec<T>], b: &[Vec<T>]) -> Result<T, MetricsError> {
    fid_from_moments(&feature_moments(a)?, &feature_moments(b)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSpec {
    pub resamples: usize,
    /// Share of each set drawn (without replacement) per resample.
    pub fraction: f64,
    pub seed: u64,
}

impl Default for BootstrapSpec {
    fn default() -> Self {
        Self { resamples: 10, fraction: 0.8, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub mean: f64,
    pub std: f64,
    pub values: Vec<f64>,
}

/// FID mean ± sample std over subsampled pairs of feature sets.
pub fn fid_bootstrap(a: &[Vec<f64>], b: &[Vec<f64>], spec: BootstrapSpec) -> Result<BootstrapResult, MetricsError> {
    if spec.resamples < 2 || !(0.0..=1.0).contains(&spec.fraction) {
        return Err(MetricsError::Domain("bootstrap needs >= 2 resamples and a fraction in (0, 1]".into()));
    }
    let take = |n: usize| ((n as f64 * spec.fraction).round() as usize).clamp(2.min(n), n);
    let mut rng = rng_from(spec.seed);
    let mut values = Vec::with_capacity(spec.resamples);
    for _ in 0..spec.resamples {
        let ia = sample(&mut rng, a.len(), take(a.len()));
        let ib = sample(&mut rng, b.len(), take(b.len()));
        let sa: Vec<Vec<f64>> = ia.iter().map(|i| a[i].clone()).collect();
        let sb: Vec<Vec<f64>> = ib.iter().map(|i| b[i].clone()).collect();
        values.push(fid_from_features(&sa, &sb)?);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (values.len() - 1) as f64;
    Ok(BootstrapResult { mean, std: var.sqrt(), values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_1d() {
        let a = FeatureMoments::diagonal(vec![0.0], &[1.0]);
        let b = FeatureMoments::diagonal(vec![3.0], &[1.0]);
        assert!((fid_from_moments(&a, &b).unwrap() - 9.0).abs() < 1e-12);
        let c = FeatureMoments::diagonal(vec![0.0], &[4.0]);
        assert!((fid_from_moments(&c, &a).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(fid_from_moments(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn moments_by_hand() {
        let m = feature_moments(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(m.mu, vec![1.0]);
        assert_eq!(m.sigma[(0, 0)], 2.0);
        let same = feature_moments(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert!(same.sigma.as_slice().iter().all(|v| *v == 0.0));
        assert!(feature_moments(&[vec![1.0]]).is_err());
        assert!(feature_moments(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let a = FeatureMoments::diagonal(vec![0.0], &[1.0]);
        let b = FeatureMoments::diagonal(vec![0.0, 0.0], &[1.0, 1.0]);
        assert!(fid_from_moments(&a, &b).is_err());
    }
}
