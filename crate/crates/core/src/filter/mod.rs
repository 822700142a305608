//! Quality filter: two 1–5 ratings per figure, averaged, kept when above the
//! corpus mean.

mod heuristics;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use heuristics::{
    clarity_score, measure_clarity, mentions_theme, semantic_heuristic, visual_clarity_heuristic, ClarityMeasures,
};

use crate::error::FilterError;
use crate::gateway::{
    request_structured, BackendKind, Gateway, PromptRequest, RatingPayload, SchemaId, StructuredFailure, TemplateId,
    STRUCTURED_TRIES,
};
use crate::model::{FigureSpec, Layout, Theme};
use crate::util::sha256_hex;

pub const FLAG_UNPARSABLE_SCORE: &str = "UNPARSABLE_SCORE";
pub const FLAG_DEGENERATE_EQUAL_SCORES: &str = "DEGENERATE_EQUAL_SCORES";

const VISUAL_LAYOUT_CRITERIA: &str = "\n\nThis figure combines several subplots. Also consider:\n\
- whether the subplots are arranged without overlap and with consistent spacing,\n\
- whether each subplot is large enough to read,\n\
- whether the subplots share a consistent visual style.";

const SEMANTIC_LAYOUT_CRITERIA: &str = "\n\nThis figure combines several subplots. Also consider:\n\
- whether every subplot relates to the same topic,\n\
- whether the subplots complement each other rather than repeat or contradict one another.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeMeta {
    pub backend: BackendKind,
    /// Digest of the two completions the scores were read from.
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub figure_id: String,
    pub r_vis: i64,
    pub r_sem: i64,
    pub r: f64,
    pub layout_condition: Layout,
    pub theme_condition: Theme,
    pub judge_meta: JudgeMeta,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl RatingRecord {
    pub fn new(figure_id: impl Into<String>, r_vis: i64, r_sem: i64, layout: Layout, theme: Theme) -> Self {
        Self {
            figure_id: figure_id.into(),
            r_vis,
            r_sem,
            r: (r_vis + r_sem) as f64 / 2.0,
            layout_condition: layout,
            theme_condition: theme,
            judge_meta: JudgeMeta { backend: BackendKind::Stub, digest: String::new() },
            flags: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterDecision {
    pub figure_id: String,
    pub r: f64,
    pub corpus_mean: f64,
    pub retained: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub decisions: Vec<FilterDecision>,
    pub corpus_mean: f64,
    pub degenerate: bool,
}

impl FilterOutcome {
    pub fn retained(&self) -> impl Iterator<Item = &FilterDecision> {
        self.decisions.iter().filter(|d| d.retained)
    }

    pub fn retention_fraction(&self) -> f64 {
        self.retained().count() as f64 / self.decisions.len().max(1) as f64
    }
}

/// One score from the judge. An unparsable reply yields 1 and a flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Score {
    pub value: i64,
    pub reason: String,
    pub completion_digest: String,
    pub flagged: bool,
}

fn layout_criteria(layout: Layout, text: &str) -> &str {
    if layout.is_single() {
        ""
    } else {
        text
    }
}

pub fn visual_request(image: &Path, layout: Layout) -> PromptRequest {
    PromptRequest::new(TemplateId::RateVisualClarity)
        .slot("layout", layout.to_string())
        .slot("layout_criteria", layout_criteria(layout, VISUAL_LAYOUT_CRITERIA))
        .image(image)
}

/// Titles and axis labels, one line per subplot.
pub fn figure_text(spec: &FigureSpec) -> String {
    let mut lines = Vec::new();
    if let Some(t) = &spec.overall_title {
        lines.push(format!("- [overall] {t}"));
    }
    let mut cells: Vec<_> = spec.subplots.iter().collect();
    cells.sort_by_key(|s| s.cell);
    for sp in cells {
        lines.push(format!("- [cell {}] {} / {} / {}", sp.cell + 1, sp.spec.title, sp.spec.x_label, sp.spec.y_label));
    }
    lines.join("\n")
}

pub fn semantic_request(image: &Path, spec: &FigureSpec, theme: Theme) -> PromptRequest {
    PromptRequest::new(TemplateId::RateSemanticCoherence)
        .slot("theme", theme.name())
        .slot("layout", spec.layout.to_string())
        .slot("figure_text", figure_text(spec))
        .slot("layout_criteria", layout_criteria(spec.layout, SEMANTIC_LAYOUT_CRITERIA))
        .image(image)
}

fn score(gateway: &Gateway, request: &PromptRequest) -> Result<Score, FilterError> {
    match request_structured(gateway, request, SchemaId::Rating, STRUCTURED_TRIES) {
        Ok((payload, completion)) => match payload.into_typed::<RatingPayload>() {
            Ok(p) => Ok(Score {
                value: p.score,
                reason: p.reason,
                completion_digest: sha256_hex(&completion.text),
                flagged: false,
            }),
            Err(e) => Ok(Score { value: 1, reason: e.to_string(), completion_digest: String::new(), flagged: true }),
        },
        Err(StructuredFailure::Gateway(e)) if e.is_budget() => Err(FilterError::Gateway(e)),
        Err(e) => {
            log::warn!("{}: no usable score ({e}); assigning 1", request.template_id);
            Ok(Score { value: 1, reason: e.to_string(), completion_digest: String::new(), flagged: true })
        }
    }
}

pub fn rate_visual_clarity(image: &Path, layout: Layout, gateway: &Gateway) -> Result<Score, FilterError> {
    score(gateway, &visual_request(image, layout))
}

pub fn rate_semantic_coherence(
    image: &Path,
    spec: &FigureSpec,
    theme: Theme,
    gateway: &Gateway,
) -> Result<Score, FilterError> {
    score(gateway, &semantic_request(image, spec, theme))
}

/// Both ratings for one figure.
pub fn rate_figure(image: &Path, spec: &FigureSpec, gateway: &Gateway) -> Result<RatingRecord, FilterError> {
    let theme = spec.theme().unwrap_or(Theme::Statistics);
    let vis = rate_visual_clarity(image, spec.layout, gateway)?;
    let sem = rate_semantic_coherence(image, spec, theme, gateway)?;
    let mut record = RatingRecord::new(spec.figure_id.clone(), vis.value, sem.value, spec.layout, theme);
    record.judge_meta = JudgeMeta {
        backend: gateway.backend_kind(),
        digest: sha256_hex(format!("{}{}", vis.completion_digest, sem.completion_digest)),
    };
    if vis.flagged || sem.flagged {
        record.flags.push(FLAG_UNPARSABLE_SCORE.to_string());
    }
    Ok(record)
}

/// Keeps the figures whose aggregate exceeds the corpus mean. An all-equal
/// corpus would lose every figure under the strict rule, so it keeps all of
/// them and flags the decision instead.
pub fn aggregate_and_filter(records: &[RatingRecord]) -> Result<FilterOutcome, FilterError> {
    if records.is_empty() {
        return Err(FilterError::Empty);
    }
    let mean = records.iter().map(|r| r.r).sum::<f64>() / records.len() as f64;
    let degenerate = records.iter().all(|r| r.r == records[0].r);
    let decisions = records
        .iter()
        .map(|rec| FilterDecision {
            figure_id: rec.figure_id.clone(),
            r: rec.r,
            corpus_mean: mean,
            retained: degenerate || rec.r > mean,
            flags: if degenerate { vec![FLAG_DEGENERATE_EQUAL_SCORES.to_string()] } else { Vec::new() },
        })
        .collect::<Vec<_>>();
    let outcome = FilterOutcome { decisions, corpus_mean: mean, degenerate };
    log::info!(
        "filter: mean {:.3}, retained {} of {} ({:.1}%)",
        mean,
        outcome.retained().count(),
        records.len(),
        100.0 * outcome.retention_fraction()
    );
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::StubBackend;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn rec(id: &str, vis: i64, sem: i64) -> RatingRecord {
        RatingRecord::new(id, vis, sem, Layout::SINGLE, Theme::Physics)
    }

    #[test]
    fn mean_threshold() {
        let recs = [rec("a", 3, 3), rec("b", 4, 4), rec("c", 5, 5)];
        let out = aggregate_and_filter(&recs).unwrap();
        assert_eq!(out.corpus_mean, 4.0);
        let kept: Vec<_> = out.retained().map(|d| d.figure_id.as_str()).collect();
        assert_eq!(kept, ["c"]);
    }

    #[test]
    fn all_equal_is_flagged() {
        let recs = [rec("a", 4, 4), rec("b", 4, 4), rec("c", 4, 4)];
        let out = aggregate_and_filter(&recs).unwrap();
        assert!(out.degenerate);
        assert!(out.decisions.iter().all(|d| d.retained && d.flags == [FLAG_DEGENERATE_EQUAL_SCORES]));
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(aggregate_and_filter(&[]), Err(FilterError::Empty)));
    }

    #[test]
    fn garbage_score_becomes_one() {
        let stub = StubBackend::new(0).with_fault(TemplateId::RateVisualClarity, "score: banana", 10);
        let gw = Gateway::new(Arc::new(stub));
        let s = rate_visual_clarity(Path::new("/nonexistent.png"), Layout::SINGLE, &gw).unwrap();
        assert_eq!(s.value, 1);
        assert!(s.flagged);
    }

    #[test]
    fn single_layout_omits_subplot_criteria() {
        let single = visual_request(Path::new("x.png"), Layout::SINGLE).prompt().unwrap();
        let multi = visual_request(Path::new("x.png"), Layout::new(2, 2).unwrap()).prompt().unwrap();
        assert!(!single.contains("several subplots"));
        assert!(multi.contains("several subplots"));
    }

    proptest! {
        #[test]
        fn partition_and_mean(scores in proptest::collection::vec((1i64..=5, 1i64..=5), 1..60)) {
            let recs: Vec<_> = scores.iter().enumerate().map(|(i, (v, s))| rec(&i.to_string(), *v, *s)).collect();
            let out = aggregate_and_filter(&recs).unwrap();
            prop_assert_eq!(out.decisions.len(), recs.len());
            let mean: f64 = out.decisions.iter().map(|d| d.r).sum::<f64>() / recs.len() as f64;
            prop_assert!((mean - out.corpus_mean).abs() < 1e-12);
            for d in &out.decisions {
                prop_assert_eq!((d.r * 2.0).fract(), 0.0);
                if !out.degenerate {
                    prop_assert_eq!(d.retained, d.r > out.corpus_mean);
                }
            }
        }
    }
}
