//! Descriptive and reasoning QA synthesis with the confidence gate.

mod stub;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use stub::synthesize_qas;

use crate::error::QaError;
use crate::gateway::{
    request_structured, Gateway, PromptRequest, QaListPayload, SchemaId, StructuredFailure, TemplateId,
    STRUCTURED_TRIES,
};
use crate::model::FigureSpec;
use crate::render::PlotProgram;

pub const DEFAULT_N_DESC: usize = 15;
pub const DEFAULT_N_REASON: usize = 15;
/// The only confidence level that passes the gate.
pub const MAX_CONFIDENCE: i64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QaKind {
    Descriptive,
    Reasoning,
}

impl QaKind {
    pub fn as_str(self) -> &'static str {
        match self {
            QaKind::Descriptive => "descriptive",
            QaKind::Reasoning => "reasoning",
        }
    }

    fn template(self) -> TemplateId {
        match self {
            QaKind::Descriptive => TemplateId::QaDescriptive,
            QaKind::Reasoning => TemplateId::QaReasoning,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaRecord {
    pub figure_id: String,
    pub qa_type: QaKind,
    pub question: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    pub confidence: i64,
    #[serde(default)]
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaBatch {
    pub figure_id: String,
    pub candidates: Vec<QaRecord>,
    pub retained: Vec<QaRecord>,
}

impl QaBatch {
    pub fn new(figure_id: impl Into<String>, candidates: Vec<QaRecord>) -> Self {
        let retained = filter_by_confidence(&candidates);
        Self { figure_id: figure_id.into(), candidates, retained }
    }
}

pub fn qa_request(kind: QaKind, spec: &FigureSpec, program: &PlotProgram, image: &Path, count: usize) -> PromptRequest {
    PromptRequest::new(kind.template())
        .slot("layout", spec.layout.to_string())
        .slot("program", program.source.as_str())
        .slot("figure_data", serde_json::to_string(spec).expect("spec serializes"))
        .slot("count", count.to_string())
        .image(image)
}

fn batch(
    kind: QaKind,
    spec: &FigureSpec,
    program: &PlotProgram,
    image: &Path,
    count: usize,
    gateway: &Gateway,
) -> Result<Vec<QaRecord>, QaError> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let request = qa_request(kind, spec, program, image, count);
    let payload = match request_structured(gateway, &request, SchemaId::QaList, STRUCTURED_TRIES) {
        Ok((p, _)) => p,
        Err(StructuredFailure::Gateway(e)) => return Err(QaError::Gateway(e)),
        Err(e) => {
            log::warn!("{}: no usable {} batch: {e}", spec.figure_id, kind.as_str());
            return Ok(Vec::new());
        }
    };
    let list: QaListPayload = match payload.into_typed() {
        Ok(l) => l,
        Err(e) => {
            log::warn!("{}: {} batch rejected: {e}", spec.figure_id, kind.as_str());
            return Ok(Vec::new());
        }
    };
    let mut out = Vec::new();
    for q in list.qas.into_iter().take(count) {
        let rationale = match kind {
            QaKind::Descriptive => None,
            QaKind::Reasoning => match q.rationale.filter(|r| !r.trim().is_empty()) {
                Some(r) => Some(r),
                None => {
                    log::debug!("{}: reasoning pair without rationale dropped", spec.figure_id);
                    continue;
                }
            },
        };
        out.push(QaRecord {
            figure_id: spec.figure_id.clone(),
            qa_type: kind,
            question: q.question,
            answer: q.answer,
            rationale,
            confidence: q.confidence,
            category: q.category.unwrap_or_default(),
            spec_ref: q.spec_ref,
        });
    }
    Ok(out)
}

/// Candidate pairs for one retained figure: `n_desc` descriptive then
/// `n_reason` reasoning, each batch in one request.
pub fn generate_qas(
    spec: &FigureSpec,
    program: &PlotProgram,
    image: &Path,
    gateway: &Gateway,
    n_desc: usize,
    n_reason: usize,
) -> Result<Vec<QaRecord>, QaError> {
    let mut out = batch(QaKind::Descriptive, spec, program, image, n_desc, gateway)?;
    out.extend(batch(QaKind::Reasoning, spec, program, image, n_reason, gateway)?);
    Ok(out)
}

/// The confidence-5 subset, in input order.
pub fn filter_by_confidence(candidates: &[QaRecord]) -> Vec<QaRecord> {
    candidates.iter().filter(|q| q.confidence == MAX_CONFIDENCE).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(confidence: i64) -> QaRecord {
        QaRecord {
            figure_id: "f".into(),
            qa_type: QaKind::Descriptive,
            question: format!("q{confidence}"),
            answer: "a".into(),
            rationale: None,
            confidence,
            category: "textual".into(),
            spec_ref: None,
        }
    }

    #[test]
    fn gate_keeps_only_fives_in_order() {
        let c: Vec<_> = [5, 4, 5, 3, 5].into_iter().map(rec).collect();
        let kept = filter_by_confidence(&c);
        assert_eq!(kept.len(), 3);
        assert!(kept.iter().all(|q| q.confidence == 5));
        let all: Vec<_> = [5, 5].into_iter().map(rec).collect();
        assert_eq!(filter_by_confidence(&all), all);
    }
}
