//! Metric properties checked against independent implementations: FID with
//! full covariances against an nalgebra eigen-decomposition, entropy against
//! invariances of the histogram.

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;

use chartforge_core::metrics::{
    feature_moments, fid_from_features, fid_from_moments, FeatureMoments, Histogram256, LogBase,
};
use chartforge_core::Matrix64;

fn nalgebra_sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose()
}

/// ||μa − μb||² + tr Σa + tr Σb − 2 tr √(√Σa Σb √Σa).
fn nalgebra_fid(mu_a: &DVector<f64>, sa: &DMatrix<f64>, mu_b: &DVector<f64>, sb: &DMatrix<f64>) -> f64 {
    let ra = nalgebra_sqrt_psd(sa);
    let inner = &ra * sb * &ra;
    let cross = nalgebra_sqrt_psd(&((&inner + inner.transpose()) * 0.5)).trace();
    (mu_a - mu_b).norm_squared() + sa.trace() + sb.trace() - 2.0 * cross
}

fn psd(d: usize, raw: &[f64]) -> DMatrix<f64> {
    let a = DMatrix::from_row_slice(d, d, &raw[..d * d]);
    &a * a.transpose() + DMatrix::identity(d, d) * 1e-3
}

fn to_moments(mu: &DVector<f64>, s: &DMatrix<f64>) -> FeatureMoments<f64> {
    let d = mu.len();
    let data = (0..d * d).map(|k| s[(k / d, k % d)]).collect();
    FeatureMoments { mu: mu.iter().copied().collect(), sigma: Matrix64::from_row_major(d, data), n_samples: 2 }
}

fn fixture() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..=6).prop_flat_map(|d| {
        (
            Just(d),
            prop::collection::vec(-3.0..3.0f64, d),
            prop::collection::vec(-2.0..2.0f64, d * d),
            prop::collection::vec(-3.0..3.0f64, d),
            prop::collection::vec(-2.0..2.0f64, d * d),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fid_matches_nalgebra((d, ma, ra, mb, rb) in fixture()) {
        let (mu_a, mu_b) = (DVector::from_vec(ma), DVector::from_vec(mb));
        let (sa, sb) = (psd(d, &ra), psd(d, &rb));
        let expected = nalgebra_fid(&mu_a, &sa, &mu_b, &sb).max(0.0);
        let got = fid_from_moments(&to_moments(&mu_a, &sa), &to_moments(&mu_b, &sb)).unwrap();
        prop_assert!((got - expected).abs() <= 1e-6 * expected.max(1.0), "{got} vs {expected}");
        let back = fid_from_moments(&to_moments(&mu_b, &sb), &to_moments(&mu_a, &sa)).unwrap();
        prop_assert!((got - back).abs() <= 1e-6 * got.max(1.0));
    }

    #[test]
    fn fid_ignores_a_common_shift((d, ma, ra, mb, rb) in fixture(), shift in -10.0..10.0f64) {
        let (sa, sb) = (psd(d, &ra), psd(d, &rb));
        let (mu_a, mu_b) = (DVector::from_vec(ma), DVector::from_vec(mb));
        let base = fid_from_moments(&to_moments(&mu_a, &sa), &to_moments(&mu_b, &sb)).unwrap();
        let moved = fid_from_moments(&to_moments(&mu_a.add_scalar(shift), &sa), &to_moments(&mu_b.add_scalar(shift), &sb)).unwrap();
        prop_assert!((base - moved).abs() <= 1e-8 * base.max(1.0));
    }

    #[test]
    fn entropy_is_order_free_and_bounded(levels in prop::collection::vec(any::<u8>(), 1..2000), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let h: f64 = Histogram256::from_levels(levels.iter().copied()).entropy(LogBase::Two);
        let mut shuffled = levels.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let h2: f64 = Histogram256::from_levels(shuffled).entropy(LogBase::Two);
        prop_assert_eq!(h, h2);
        let distinct = levels.iter().collect::<std::collections::BTreeSet<_>>().len() as f64;
        prop_assert!(h >= 0.0 && h <= distinct.log2() + 1e-12);
        let nats: f64 = Histogram256::from_levels(levels.iter().copied()).entropy(LogBase::E);
        prop_assert!((nats - h * std::f64::consts::LN_2).abs() < 1e-12);
    }
}

#[test]
fn sample_moments_match_nalgebra() {
    let rows: Vec<Vec<f64>> = (0..40)
        .map(|i| {
            let t = i as f64;
            vec![t.sin(), (0.3 * t).cos() * 2.0, 0.1 * t]
        })
        .collect();
    let m = feature_moments(&rows).unwrap();
    let data = DMatrix::from_fn(40, 3, |r, c| rows[r][c]);
    let mean = data.row_mean();
    let centered = DMatrix::from_fn(40, 3, |r, c| data[(r, c)] - mean[c]);
    let cov = centered.transpose() * &centered / 39.0;
    for i in 0..3 {
        assert_relative_eq!(m.mu[i], mean[i], epsilon = 1e-12);
        for j in 0..3 {
            assert_relative_eq!(m.sigma[(i, j)], cov[(i, j)], epsilon = 1e-12);
        }
    }
    assert_relative_eq!(fid_from_features(&rows, &rows).unwrap(), 0.0, epsilon = 1e-9);
}

#[test]
fn f32_agrees_with_f64() {
    let a = FeatureMoments::<f32>::diagonal(vec![0.0, 1.0], &[1.0, 2.0]);
    let b = FeatureMoments::<f32>::diagonal(vec![3.0, 1.0], &[1.0, 8.0]);
    // 9 + (2 + 8 − 2·4) = 11
    assert_relative_eq!(fid_from_moments(&a, &b).unwrap(), 11.0f32, epsilon = 1e-4);
}
