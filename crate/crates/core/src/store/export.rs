use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::manifest::Stage;
use super::Store;
use crate::error::StoreError;
use crate::qa::{QaKind, QaRecord};
use crate::util::rng_from;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    /// One QA record per line.
    Plain,
    /// Image + prompt + target per line.
    Instruction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportSpec {
    /// Descriptive : reasoning.
    pub ratio: (u32, u32),
    /// Total records wanted; `None` takes as many as the ratio allows.
    pub size: Option<usize>,
    pub format: ExportFormat,
    pub seed: u64,
}

impl Default for ExportSpec {
    fn default() -> Self {
        Self { ratio: (1, 1), size: None, format: ExportFormat::Plain, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportRecord {
    pub item_id: String,
    pub figure_id: String,
    pub image_path: String,
    pub qa_type: QaKind,
    pub question: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    pub category: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub item_id: String,
    pub image: String,
    pub prompt: String,
    pub target: String,
}

impl From<&ExportRecord> for InstructionRecord {
    fn from(r: &ExportRecord) -> Self {
        let target = match &r.rationale {
            Some(why) => format!("{why}\nFinal answer: {}", r.answer),
            None => r.answer.clone(),
        };
        Self { item_id: r.item_id.clone(), image: r.image_path.clone(), prompt: r.question.clone(), target }
    }
}

/// Sidecar written next to the export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportStats {
    pub ratio: (u32, u32),
    pub requested: (usize, usize),
    pub descriptive: usize,
    pub reasoning: usize,
    pub per_theme: BTreeMap<String, usize>,
    pub per_chart_type: BTreeMap<String, usize>,
    pub per_category: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

/// How many of each kind to draw for `ratio` from pools of `avail` items.
fn targets(ratio: (u32, u32), size: Option<usize>, avail: (usize, usize)) -> (usize, usize) {
    let (d, r) = (ratio.0 as usize, ratio.1 as usize);
    match size {
        Some(n) => {
            let want_d = (n * d + (d + r) / 2) / (d + r);
            (want_d, n - want_d)
        }
        None if r == 0 => (avail.0, 0),
        None if d == 0 => (0, avail.1),
        None => {
            let k = (avail.0 / d).min(avail.1 / r);
            (k * d, k * r)
        }
    }
}

/// Samples retained QA records to the requested ratio (without replacement),
/// copies the referenced images and writes `<out>/qa.jsonl` plus
/// `<out>/stats.json`. Shortfalls on either side are warned about and the
/// export proceeds with what is available.
pub fn export_training_set(store: &Store, out: &Path, spec: &ExportSpec) -> Result<ExportStats, StoreError> {
    if spec.ratio == (0, 0) {
        return Err(StoreError::Domain("ratio 0:0 selects nothing".into()));
    }
    let mut pools: BTreeMap<QaKind, Vec<ExportRecord>> = BTreeMap::new();
    let mut figure_meta = BTreeMap::new();
    for e in store.manifest().done(Stage::Qa) {
        let (Some(qa_rel), Some(image_rel)) = (e.paths.qa.as_deref(), e.paths.image.as_deref()) else { continue };
        figure_meta.insert(e.figure_id.clone(), (e.theme.name().to_string(), e.cell_types.clone()));
        let batch: crate::qa::QaBatch = store.read_json(qa_rel)?;
        for (i, q) in batch.retained.iter().enumerate() {
            pools.entry(q.qa_type).or_default().push(export_record(q, i, image_rel));
        }
    }
    let avail =
        (pools.get(&QaKind::Descriptive).map_or(0, Vec::len), pools.get(&QaKind::Reasoning).map_or(0, Vec::len));
    let requested = targets(spec.ratio, spec.size, avail);
    let mut warnings = Vec::new();
    if spec.size.is_some_and(|n| n > avail.0 + avail.1) {
        warnings.push(format!("requested {} records but only {} exist", spec.size.unwrap_or(0), avail.0 + avail.1));
    }
    let mut rng = rng_from(spec.seed);
    let mut chosen = Vec::new();
    for (kind, want, have) in [(QaKind::Descriptive, requested.0, avail.0), (QaKind::Reasoning, requested.1, avail.1)] {
        if want > have {
            warnings.push(format!("{}: wanted {want}, only {have} available", kind.as_str()));
        }
        let mut pool = pools.remove(&kind).unwrap_or_default();
        pool.shuffle(&mut rng);
        pool.truncate(want);
        chosen.extend(pool);
    }
    chosen.shuffle(&mut rng);
    for w in &warnings {
        log::warn!("export: {w}");
    }

    fs::create_dir_all(out.join("images")).map_err(|e| StoreError::io(out, e))?;
    let mut lines = Vec::with_capacity(chosen.len());
    let mut copied = std::collections::BTreeSet::new();
    for r in &mut chosen {
        let src = store.path(&r.image_path);
        let name = format!("images/{}.png", r.figure_id);
        if copied.insert(r.figure_id.clone()) {
            let dst: PathBuf = out.join(&name);
            fs::copy(&src, &dst).map_err(|e| StoreError::io(&src, e))?;
        }
        r.image_path = name;
        let line = match spec.format {
            ExportFormat::Plain => serde_json::to_string(r),
            ExportFormat::Instruction => serde_json::to_string(&InstructionRecord::from(&*r)),
        };
        lines.push(line.expect("export records serialize"));
    }
    let mut body = lines.join("\n");
    if !body.is_empty() {
        body.push('\n');
    }
    let qa_path = out.join("qa.jsonl");
    fs::write(&qa_path, body).map_err(|e| StoreError::io(&qa_path, e))?;

    let mut stats = ExportStats {
        ratio: spec.ratio,
        requested,
        descriptive: 0,
        reasoning: 0,
        per_theme: BTreeMap::new(),
        per_chart_type: BTreeMap::new(),
        per_category: BTreeMap::new(),
        warnings,
    };
    for r in &chosen {
        match r.qa_type {
            QaKind::Descriptive => stats.descriptive += 1,
            QaKind::Reasoning => stats.reasoning += 1,
        }
        if let Some((theme, types)) = figure_meta.get(&r.figure_id) {
            *stats.per_theme.entry(theme.clone()).or_default() += 1;
            for t in types {
                *stats.per_chart_type.entry(t.as_str().to_string()).or_default() += 1;
            }
        }
        *stats.per_category.entry(r.category.clone()).or_default() += 1;
    }
    let stats_path = out.join("stats.json");
    fs::write(&stats_path, serde_json::to_vec_pretty(&stats).expect("stats serialize"))
        .map_err(|e| StoreError::io(&stats_path, e))?;
    Ok(stats)
}

fn export_record(q: &QaRecord, index: usize, image_rel: &str) -> ExportRecord {
    let tag = match q.qa_type {
        QaKind::Descriptive => 'd',
        QaKind::Reasoning => 'r',
    };
    ExportRecord {
        item_id: format!("{}-{tag}{index:02}", q.figure_id),
        figure_id: q.figure_id.clone(),
        image_path: image_rel.to_string(),
        qa_type: q.qa_type,
        question: q.question.clone(),
        answer: q.answer.clone(),
        rationale: q.rationale.clone(),
        category: q.category.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_counts() {
        assert_eq!(targets((1, 1), Some(10), (10, 10)), (5, 5));
        assert_eq!(targets((5, 0), None, (7, 9)), (7, 0));
        assert_eq!(targets((2, 3), None, (10, 10)), (6, 9));
        assert_eq!(targets((2, 3), Some(10), (10, 10)), (4, 6));
    }
}
