use std::path::Path;

use image::RgbImage;
use num_traits::Float;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::MetricsError;

/// Luma weights for the grayscale conversion.
pub const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    /// Bits; bounded by 8 for 256 levels.
    #[default]
    Two,
    /// Nats.
    E,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram256 {
    pub counts: [u64; 256],
    pub total: u64,
}

impl Histogram256 {
    pub fn from_counts(counts: [u64; 256]) -> Self {
        Self { counts, total: counts.iter().sum() }
    }

    pub fn from_levels(levels: impl IntoIterator<Item = u8>) -> Self {
        let mut counts = [0u64; 256];
        for l in levels {
            counts[l as usize] += 1;
        }
        Self::from_counts(counts)
    }

    pub fn from_rgb(img: &RgbImage) -> Self {
        Self::from_levels(img.pixels().map(|p| luma(p.0)))
    }

    /// `-Σ p log p` over the non-empty levels.
    pub fn entropy<T: Float>(&self, base: LogBase) -> T {
        if self.total == 0 {
            return T::zero();
        }
        let total = T::from(self.total).expect("count fits the float type");
        let h = self.counts.iter().filter(|&&c| c > 0).fold(T::zero(), |acc, &c| {
            let p = T::from(c).expect("count fits the float type") / total;
            acc - p * p.log2()
        });
        match base {
            LogBase::Two => h,
            LogBase::E => h * T::from(std::f64::consts::LN_2).expect("representable"),
        }
    }
}

/// 8-bit luma of an RGB pixel.
pub fn luma(rgb: [u8; 3]) -> u8 {
    let v = LUMA[0] * rgb[0] as f64 + LUMA[1] * rgb[1] as f64 + LUMA[2] * rgb[2] as f64;
    v.round().clamp(0.0, 255.0) as u8
}

pub fn load_rgb(path: &Path) -> Result<RgbImage, MetricsError> {
    image::open(path)
        .map(|i| i.to_rgb8())
        .map_err(|e| MetricsError::Input { path: path.to_path_buf(), reason: e.to_string() })
}

pub fn pixel_entropy(path: &Path, base: LogBase) -> Result<f64, MetricsError> {
    Ok(Histogram256::from_rgb(&load_rgb(path)?).entropy(base))
}

/// Per-image entropies (in input order) and their mean.
pub fn average_entropy<P: AsRef<Path> + Sync>(paths: &[P], base: LogBase) -> Result<(f64, Vec<f64>), MetricsError> {
    if paths.is_empty() {
        return Err(MetricsError::Domain("average entropy of an empty image set".into()));
    }
    let each: Vec<f64> = paths.par_iter().map(|p| pixel_entropy(p.as_ref(), base)).collect::<Result<_, _>>()?;
    let mean = each.iter().sum::<f64>() / each.len() as f64;
    Ok((mean, each))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let constant = Histogram256::from_levels(std::iter::repeat_n(128, 1000));
        assert_eq!(constant.entropy::<f64>(LogBase::Two), 0.0);
        let two = Histogram256::from_levels((0..1000).map(|i| if i % 2 == 0 { 0 } else { 255 }));
        assert!((two.entropy::<f64>(LogBase::Two) - 1.0).abs() < 1e-12);
        let uniform = Histogram256::from_levels((0..256 * 4).map(|i| (i % 256) as u8));
        assert!((uniform.entropy::<f64>(LogBase::Two) - 8.0).abs() < 1e-12);
        assert!((uniform.entropy::<f32>(LogBase::Two) - 8.0).abs() < 1e-5);
        assert!((two.entropy::<f64>(LogBase::E) - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn luma_weights() {
        assert_eq!(luma([255, 255, 255]), 255);
        assert_eq!(luma([0, 0, 0]), 0);
        assert_eq!(luma([255, 0, 0]), 76);
    }
}
