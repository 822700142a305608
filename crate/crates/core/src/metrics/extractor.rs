use std::path::{Path, PathBuf};
use std::process::Command;

use rayon::prelude::*;

use super::entropy::{load_rgb, luma};
use crate::error::MetricsError;

/// Maps an image to a fixed-length feature vector.
pub trait FeatureExtractor: Send + Sync {
    fn name(&self) -> &str;
    fn extract(&self, path: &Path) -> Result<Vec<f64>, MetricsError>;

    fn extract_all(&self, paths: &[PathBuf]) -> Result<Vec<Vec<f64>>, MetricsError> {
        paths.par_iter().map(|p| self.extract(p)).collect()
    }
}

/// Cheap deterministic features: mean luma of each cell of a 4x4 grid plus
/// the global mean and standard deviation, all scaled to [0, 1].
#[derive(Debug, Clone, Copy, Default)]
pub struct ToyExtractor;

pub const TOY_GRID: usize = 4;
pub const TOY_DIM: usize = TOY_GRID * TOY_GRID + 2;

impl FeatureExtractor for ToyExtractor {
    fn name(&self) -> &str {
        "toy"
    }

    fn extract(&self, path: &Path) -> Result<Vec<f64>, MetricsError> {
        let img = load_rgb(path)?;
        let (w, h) = img.dimensions();
        if w == 0 || h == 0 {
            return Err(MetricsError::Input { path: path.to_path_buf(), reason: "empty image".into() });
        }
        let mut sums = [0f64; TOY_GRID * TOY_GRID];
        let mut counts = [0u64; TOY_GRID * TOY_GRID];
        let (mut total, mut total_sq) = (0f64, 0f64);
        for (x, y, p) in img.enumerate_pixels() {
            let v = luma(p.0) as f64 / 255.0;
            let cell = (y as usize * TOY_GRID / h as usize) * TOY_GRID + x as usize * TOY_GRID / w as usize;
            sums[cell] += v;
            counts[cell] += 1;
            total += v;
            total_sq += v * v;
        }
        let n = (w as f64) * (h as f64);
        let mean = total / n;
        let var = (total_sq / n - mean * mean).max(0.0);
        let mut out: Vec<f64> =
            sums.iter().zip(&counts).map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect();
        out.push(mean);
        out.push(var.sqrt());
        Ok(out)
    }
}

/// Runs an external program once per image (`<program> <args..> <image>`)
/// and reads whitespace- or comma-separated floats from its stdout. This is
/// the hook for plugging in a learned feature network.
#[derive(Debug, Clone)]
pub struct CommandExtractor {
    pub program: String,
    pub args: Vec<String>,
}

impl CommandExtractor {
    /// Splits a command line on whitespace.
    pub fn parse(command: &str) -> Result<Self, MetricsError> {
        let mut parts = command.split_whitespace().map(str::to_string);
        let program = parts.next().ok_or_else(|| MetricsError::Extractor("empty extractor command".into()))?;
        Ok(Self { program, args: parts.collect() })
    }
}

impl FeatureExtractor for CommandExtractor {
    fn name(&self) -> &str {
        &self.program
    }

    fn extract(&self, path: &Path) -> Result<Vec<f64>, MetricsError> {
        let out = Command::new(&self.program)
            .args(&self.args)
            .arg(path)
            .output()
            .map_err(|e| MetricsError::Extractor(format!("{}: {e}", self.program)))?;
        if !out.status.success() {
            return Err(MetricsError::Extractor(format!(
                "{} exited with {} on {}",
                self.program,
                out.status,
                path.display()
            )));
        }
        let text = String::from_utf8_lossy(&out.stdout);
        let values: Vec<f64> = text
            .split(|c: char| c.is_whitespace() || c == ',' || c == '[' || c == ']')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|e| MetricsError::Extractor(format!("bad feature {t:?}: {e}"))))
            .collect::<Result<_, _>>()?;
        if values.is_empty() {
            return Err(MetricsError::Extractor(format!("no features for {}", path.display())));
        }
        Ok(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{Rgb, RgbImage};

    #[test]
    fn toy_features_of_split_image() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("half.png");
        let img = RgbImage::from_fn(40, 40, |x, _| if x < 20 { Rgb([0, 0, 0]) } else { Rgb([255, 255, 255]) });
        img.save(&path).unwrap();
        let f = ToyExtractor.extract(&path).unwrap();
        assert_eq!(f.len(), TOY_DIM);
        assert_eq!(f[0], 0.0);
        assert_eq!(f[3], 1.0);
        assert!((f[16] - 0.5).abs() < 1e-12);
        assert!((f[17] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn undecodable_is_input_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.png");
        std::fs::write(&path, b"not a png").unwrap();
        assert!(matches!(ToyExtractor.extract(&path), Err(MetricsError::Input { .. })));
    }
}
