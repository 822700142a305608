//! Dataset diversity and style metrics: pixel entropy, Fréchet distance over
//! image features, and a tally of visual changes made by diversification.

mod entropy;
mod extractor;
mod fid;
pub mod linalg;
mod style_stats;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use entropy::{average_entropy, luma, pixel_entropy, Histogram256, LogBase, LUMA};
pub use extractor::{CommandExtractor, FeatureExtractor, ToyExtractor, TOY_DIM, TOY_GRID};
pub use fid::{
    feature_moments, fid_bootstrap, fid_from_features, fid_from_moments, BootstrapResult, BootstrapSpec,
    FeatureMoments, NEGATIVE_SLACK,
};
pub use style_stats::{added_lines, detect_changes, style_change_stats, ChangeClass, StyleChangeReport, MANY_CHANGES};

use crate::error::MetricsError;

/// Output of the `metrics` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub avg_entropy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_image_entropy: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fid: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap_std: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct MetricsRequest {
    pub images: Vec<PathBuf>,
    /// Reference set for FID; FID is skipped when empty.
    pub reference: Vec<PathBuf>,
    pub base: LogBase,
    pub per_image: bool,
    pub bootstrap: Option<BootstrapSpec>,
}

pub fn compute_metrics(req: &MetricsRequest, extractor: &dyn FeatureExtractor) -> Result<MetricsReport, MetricsError> {
    let (avg, each) = average_entropy(&req.images, req.base)?;
    let per_image_entropy = req.per_image.then(|| {
        req.images
            .iter()
            .zip(&each)
            .map(|(p, h)| (p.file_stem().unwrap_or_default().to_string_lossy().into_owned(), *h))
            .collect()
    });
    let (mut fid, mut bootstrap_std) = (None, None);
    if !req.reference.is_empty() {
        let a = extractor.extract_all(&req.images)?;
        let b = extractor.extract_all(&req.reference)?;
        fid = Some(fid_from_features(&a, &b)?);
        if let Some(spec) = req.bootstrap {
            bootstrap_std = Some(fid_bootstrap(&a, &b, spec)?.std);
        }
    }
    Ok(MetricsReport { avg_entropy: avg, per_image_entropy, fid, bootstrap_std })
}
