//! Scoring predictions against QA ground truth: an offline matcher stack, an
//! LLM-judge adapter and Des./Rea./Avg. accuracy reports.

mod matchers;

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use matchers::{
    binary_match, exact_match, extract_last_number, normalize_answer, numeric_tolerance_match, parse_numeric_gt,
    Binary, DEFAULT_TOLERANCE, ZERO_ABS_TOLERANCE,
};

use crate::error::EvalError;
use crate::gateway::{
    request_structured, Gateway, PromptRequest, SchemaId, StructuredFailure, TemplateId, VerdictLabel, VerdictPayload,
    STRUCTURED_TRIES,
};
use crate::qa::QaKind;

pub const FLAG_JUDGE_UNPARSABLE: &str = "JUDGE_UNPARSABLE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalItem {
    pub item_id: String,
    pub qa_type: QaKind,
    pub question: String,
    pub ground_truth: String,
    pub prediction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numeric_gt: Option<f64>,
}

impl EvalItem {
    pub fn new(
        item_id: impl Into<String>,
        qa_type: QaKind,
        question: impl Into<String>,
        ground_truth: impl Into<String>,
        prediction: impl Into<String>,
    ) -> Self {
        let ground_truth = ground_truth.into();
        Self {
            item_id: item_id.into(),
            qa_type,
            question: question.into(),
            numeric_gt: parse_numeric_gt(&ground_truth),
            ground_truth,
            prediction: prediction.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Judge,
    Tolerance,
    Binary,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub item_id: String,
    pub correct: bool,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Offline,
    Judge,
}

fn binary_gt(gt: &str) -> Option<Binary> {
    match normalize_answer(gt).as_str() {
        "yes" => Some(Binary::Yes),
        "no" => Some(Binary::No),
        _ => None,
    }
}

/// Offline routing: numeric ground truths go to the tolerance matcher, yes/no
/// ground truths to the binary matcher, everything else to normalised exact match.
pub fn offline_judge(gt: &str, prediction: &str, tol: f64) -> (bool, Method) {
    if let Some(g) = parse_numeric_gt(gt) {
        let ok = extract_last_number(prediction)
            .map(|p| numeric_tolerance_match(g, p, tol).unwrap_or(false))
            .unwrap_or(false);
        return (ok, Method::Tolerance);
    }
    if let Some(b) = binary_gt(gt) {
        return (binary_match(prediction) == b, Method::Binary);
    }
    (exact_match(gt, prediction), Method::Exact)
}

/// The offline verdict, used by the stub judge as well.
pub fn offline_verdict(_question: &str, gt: &str, prediction: &str, tol: f64) -> bool {
    offline_judge(gt, prediction, tol).0
}

pub fn judge_request(item: &EvalItem, tol: f64) -> PromptRequest {
    PromptRequest::new(TemplateId::EvalJudge)
        .slot("question", item.question.as_str())
        .slot("ground_truth", item.ground_truth.as_str())
        .slot("prediction", item.prediction.as_str())
        .slot("tolerance_pct", crate::util::fmt_num(tol * 100.0))
}

pub fn judge_item(item: &EvalItem, mode: EvalMode, gateway: Option<&Gateway>, tol: f64) -> Result<Verdict, EvalError> {
    match (mode, gateway) {
        (EvalMode::Offline, _) => {
            let (correct, method) = offline_judge(&item.ground_truth, &item.prediction, tol);
            Ok(Verdict { item_id: item.item_id.clone(), correct, method, flags: Vec::new() })
        }
        (EvalMode::Judge, None) => Err(EvalError::Input("judge mode needs a gateway".into())),
        (EvalMode::Judge, Some(gw)) => {
            let request = judge_request(item, tol);
            let verdict = match request_structured(gw, &request, SchemaId::Verdict, STRUCTURED_TRIES) {
                Ok((payload, _)) => payload.into_typed::<VerdictPayload>().ok().map(|v| v.verdict),
                Err(StructuredFailure::Gateway(e)) => return Err(EvalError::Gateway(e)),
                Err(e) => {
                    log::warn!("{}: judge unusable: {e}", item.item_id);
                    None
                }
            };
            Ok(match verdict {
                Some(v) => Verdict {
                    item_id: item.item_id.clone(),
                    correct: v == VerdictLabel::Correct,
                    method: Method::Judge,
                    flags: Vec::new(),
                },
                None => Verdict {
                    item_id: item.item_id.clone(),
                    correct: false,
                    method: Method::Judge,
                    flags: vec![FLAG_JUDGE_UNPARSABLE.into()],
                },
            })
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassTally {
    pub correct: usize,
    pub total: usize,
}

impl ClassTally {
    /// Percentage, or `None` for an empty class.
    pub fn accuracy(&self) -> Option<f64> {
        (self.total > 0).then(|| 100.0 * self.correct as f64 / self.total as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    /// Des.
    pub descriptive: Option<f64>,
    /// Rea.
    pub reasoning: Option<f64>,
    /// Avg.: unweighted mean over all items.
    pub average: f64,
    pub counts: BTreeMap<QaKind, ClassTally>,
    pub n_items: usize,
}

/// Streaming accumulator; `finish` gives the same numbers as
/// [`compute_accuracy`] over the same verdicts.
#[derive(Debug, Clone, Default)]
pub struct AccuracyAccumulator {
    counts: BTreeMap<QaKind, ClassTally>,
}

impl AccuracyAccumulator {
    pub fn add(&mut self, kind: QaKind, correct: bool) {
        let t = self.counts.entry(kind).or_default();
        t.total += 1;
        t.correct += correct as usize;
    }

    pub fn finish(&self) -> Result<AccuracyReport, EvalError> {
        let total: usize = self.counts.values().map(|t| t.total).sum();
        if total == 0 {
            return Err(EvalError::Input("no items to score".into()));
        }
        let correct: usize = self.counts.values().map(|t| t.correct).sum();
        let get = |k| self.counts.get(&k).copied().unwrap_or_default();
        Ok(AccuracyReport {
            descriptive: get(QaKind::Descriptive).accuracy(),
            reasoning: get(QaKind::Reasoning).accuracy(),
            average: 100.0 * correct as f64 / total as f64,
            counts: self.counts.clone(),
            n_items: total,
        })
    }
}

pub fn compute_accuracy(items: &[EvalItem], verdicts: &[Verdict]) -> Result<AccuracyReport, EvalError> {
    let by_id: BTreeMap<&str, &Verdict> = verdicts.iter().map(|v| (v.item_id.as_str(), v)).collect();
    let mut acc = AccuracyAccumulator::default();
    for item in items {
        let v = by_id
            .get(item.item_id.as_str())
            .ok_or_else(|| EvalError::Input(format!("no verdict for item {}", item.item_id)))?;
        acc.add(item.qa_type, v.correct);
    }
    acc.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub item_id: String,
    pub prediction: String,
}

/// A ground-truth line of the plain QA export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub item_id: String,
    pub qa_type: QaKind,
    pub question: String,
    pub answer: String,
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, EvalError> {
    let file = std::fs::File::open(path).map_err(|e| EvalError::Input(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| EvalError::Input(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| EvalError::Input(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

/// Joins predictions to ground truth by `item_id`. Every prediction must name
/// a known item; items without a prediction are scored as empty answers.
pub fn load_items(predictions: &Path, dataset: &Path) -> Result<Vec<EvalItem>, EvalError> {
    let preds: Vec<Prediction> = read_jsonl(predictions)?;
    let truth: Vec<GroundTruth> = read_jsonl(dataset)?;
    let mut by_id: BTreeMap<String, String> = BTreeMap::new();
    for p in preds {
        if by_id.insert(p.item_id.clone(), p.prediction).is_some() {
            return Err(EvalError::Input(format!("duplicate prediction for {}", p.item_id)));
        }
    }
    let known: std::collections::BTreeSet<&str> = truth.iter().map(|t| t.item_id.as_str()).collect();
    if let Some(stray) = by_id.keys().find(|k| !known.contains(k.as_str())) {
        return Err(EvalError::Input(format!("prediction for unknown item {stray}")));
    }
    Ok(truth
        .into_iter()
        .map(|t| {
            let pred = by_id.get(&t.item_id).cloned().unwrap_or_default();
            EvalItem::new(t.item_id, t.qa_type, t.question, t.answer, pred)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offline_examples() {
        assert_eq!(offline_judge("42", "The answer is 43", DEFAULT_TOLERANCE), (true, Method::Tolerance));
        assert_eq!(offline_judge("Paris", "paris.", DEFAULT_TOLERANCE), (true, Method::Exact));
        assert_eq!(offline_judge("yes", "Absolutely not", DEFAULT_TOLERANCE), (false, Method::Binary));
    }

    #[test]
    fn accuracy_split() {
        let mut items = Vec::new();
        let mut verdicts = Vec::new();
        for (i, (kind, ok)) in [
            (QaKind::Descriptive, true),
            (QaKind::Descriptive, true),
            (QaKind::Descriptive, false),
            (QaKind::Descriptive, false),
            (QaKind::Reasoning, true),
            (QaKind::Reasoning, true),
            (QaKind::Reasoning, true),
            (QaKind::Reasoning, false),
        ]
        .into_iter()
        .enumerate()
        {
            items.push(EvalItem::new(i.to_string(), kind, "q", "a", "a"));
            verdicts.push(Verdict { item_id: i.to_string(), correct: ok, method: Method::Exact, flags: vec![] });
        }
        let r = compute_accuracy(&items, &verdicts).unwrap();
        assert_eq!(r.descriptive, Some(50.0));
        assert_eq!(r.reasoning, Some(75.0));
        assert_eq!(r.average, 62.5);
        assert!(compute_accuracy(&[], &[]).is_err());
        assert!(compute_accuracy(&items, &verdicts[..3]).is_err());
    }

    #[test]
    fn judge_without_gateway_is_input_error() {
        let item = EvalItem::new("1", QaKind::Reasoning, "q", "1", "1");
        assert!(judge_item(&item, EvalMode::Judge, None, 0.05).is_err());
        let gw = Gateway::stub(0);
        assert!(judge_item(&item, EvalMode::Judge, Some(&gw), 0.05).unwrap().correct);
    }
}
