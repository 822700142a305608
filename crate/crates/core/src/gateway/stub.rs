//! Offline backend. Every completion is a pure function of the template, the
//! slot values, the attached image bytes and the backend seed, so runs are
//! reproducible without network access.

use std::collections::BTreeMap;
use std::str::FromStr;

use parking_lot::Mutex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use sha2::{Digest, Sha256};

use super::{Backend, BackendKind, PromptRequest, RawCompletion, TemplateId, TransportError, Usage};
use crate::generator::synth::synthesize_chart;
use crate::model::{ChartType, Layout, Theme, Trend};
use crate::util::rng_from;

/// Share of single plots whose text drifts to another theme.
const SINGLE_DRIFT: f64 = 0.10;
/// Share of subplots that drift. Longer contexts wander more.
const SUBPLOT_DRIFT: f64 = 0.18;

/// A canned reply served in place of the normal one.
#[derive(Debug, Clone)]
enum Fault {
    Reply(String),
    Transport(TransportError),
}

pub struct StubBackend {
    seed: u64,
    faults: Mutex<BTreeMap<TemplateId, (Fault, usize)>>,
}

impl StubBackend {
    pub fn new(seed: u64) -> Self {
        Self { seed, faults: Mutex::new(BTreeMap::new()) }
    }

    /// The next `times` calls for `template` reply with `text` instead.
    pub fn with_fault(self, template: TemplateId, text: impl Into<String>, times: usize) -> Self {
        self.faults.lock().insert(template, (Fault::Reply(text.into()), times));
        self
    }

    /// The next `times` calls for `template` fail at the transport level.
    pub fn with_transport_fault(self, template: TemplateId, error: TransportError, times: usize) -> Self {
        self.faults.lock().insert(template, (Fault::Transport(error), times));
        self
    }

    fn take_fault(&self, template: TemplateId) -> Option<Fault> {
        let mut faults = self.faults.lock();
        let (fault, left) = faults.get_mut(&template)?;
        if *left == 0 {
            return None;
        }
        *left -= 1;
        Some(fault.clone())
    }

    fn request_rng(&self, request: &PromptRequest) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(request.template_id.as_str().as_bytes());
        for (k, v) in &request.slots {
            h.update((k.len() as u64).to_le_bytes());
            h.update(k.as_bytes());
            h.update((v.len() as u64).to_le_bytes());
            h.update(v.as_bytes());
        }
        for img in &request.images {
            match std::fs::read(img) {
                Ok(bytes) => h.update(Sha256::digest(&bytes)),
                Err(_) => h.update(b"missing"),
            }
        }
        let out = h.finalize();
        rng_from(u64::from_le_bytes(out[..8].try_into().expect("8 bytes")))
    }

    fn respond(&self, request: &PromptRequest, rng: &mut ChaCha8Rng) -> Result<String, TransportError> {
        let slot = |name: &str| -> Result<&str, TransportError> {
            request
                .slots
                .get(name)
                .map(String::as_str)
                .ok_or_else(|| TransportError::Fatal(format!("stub: slot {name} missing")))
        };
        let parse_err = |what: &str, v: &str| TransportError::Fatal(format!("stub: cannot read {what} from {v:?}"));
        match request.template_id {
            TemplateId::SinglePlotGen | TemplateId::SubplotGen => {
                let theme =
                    Theme::from_str(slot("theme")?).map_err(|_| parse_err("theme", slot("theme").unwrap_or("")))?;
                let ty = ChartType::from_str(slot("chart_type")?).map_err(|_| parse_err("chart_type", ""))?;
                let trend = parse_trend(slot("trend")?).ok_or_else(|| parse_err("trend", ""))?;
                let count: usize = slot("element_count")?.parse().map_err(|_| parse_err("element_count", ""))?;
                let drift = if request.template_id == TemplateId::SinglePlotGen { SINGLE_DRIFT } else { SUBPLOT_DRIFT };
                let text_theme = drifted_theme(theme, drift, rng);
                let payload = synthesize_chart(ty, theme, text_theme, trend, count, rng);
                Ok(fenced("json", &serde_json::to_string_pretty(&payload).expect("payload serializes")))
            }
            TemplateId::JointFigureGen => {
                let theme = Theme::from_str(slot("theme")?).map_err(|_| parse_err("theme", ""))?;
                let mut subplots = Vec::new();
                for line in slot("cell_types")?.lines() {
                    let (ty, count, trend) = parse_cell_line(line).ok_or_else(|| parse_err("cell line", line))?;
                    let text_theme = drifted_theme(theme, SUBPLOT_DRIFT, rng);
                    subplots.push(synthesize_chart(ty, theme, text_theme, trend, count, rng));
                }
                Ok(fenced("json", &serde_json::to_string_pretty(&json!({ "subplots": subplots })).expect("serializes")))
            }
            TemplateId::SingleDiversify | TemplateId::MultiDiversify => {
                let strategy = crate::diversify::Strategy::from_instruction(slot("strategy")?)
                    .ok_or_else(|| parse_err("strategy", slot("strategy").unwrap_or("")))?;
                let program = crate::diversify::stub_transform(strategy, slot("program")?, rng);
                Ok(fenced("python", &program))
            }
            TemplateId::FigsizePostprocess => {
                let program = crate::diversify::analytic_geometry_fix(slot("program")?);
                Ok(fenced("python", &program))
            }
            TemplateId::RateVisualClarity => {
                let layout = Layout::from_str(slot("layout")?).map_err(|_| parse_err("layout", ""))?;
                let image =
                    request.images.first().ok_or_else(|| TransportError::Fatal("stub: no image attached".into()))?;
                let (score, reason) = crate::filter::visual_clarity_heuristic(image, layout)
                    .map_err(|e| TransportError::Fatal(format!("stub: {e}")))?;
                Ok(fenced("json", &json!({ "score": score, "reason": reason }).to_string()))
            }
            TemplateId::RateSemanticCoherence => {
                let theme = Theme::from_str(slot("theme")?).map_err(|_| parse_err("theme", ""))?;
                let (score, reason) = crate::filter::semantic_heuristic(theme, slot("figure_text")?);
                Ok(fenced("json", &json!({ "score": score, "reason": reason }).to_string()))
            }
            TemplateId::QaDescriptive | TemplateId::QaReasoning => {
                let spec = serde_json::from_str(slot("figure_data")?).map_err(|_| parse_err("figure_data", ""))?;
                let count: usize = slot("count")?.parse().map_err(|_| parse_err("count", ""))?;
                let kind = if request.template_id == TemplateId::QaDescriptive {
                    crate::qa::QaKind::Descriptive
                } else {
                    crate::qa::QaKind::Reasoning
                };
                let qas = crate::qa::synthesize_qas(&spec, kind, count, rng);
                Ok(fenced("json", &serde_json::to_string_pretty(&json!({ "qas": qas })).expect("serializes")))
            }
            TemplateId::EvalJudge => {
                let tol: f64 = slot("tolerance_pct")?.parse().map_err(|_| parse_err("tolerance_pct", ""))?;
                let verdict = crate::eval::offline_verdict(
                    slot("question")?,
                    slot("ground_truth")?,
                    slot("prediction")?,
                    tol / 100.0,
                );
                let label = if verdict { "correct" } else { "incorrect" };
                Ok(fenced("json", &json!({ "verdict": label }).to_string()))
            }
        }
    }
}

impl Backend for StubBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Stub
    }

    fn call(&self, request: &PromptRequest, prompt: &str) -> Result<RawCompletion, TransportError> {
        let text = match self.take_fault(request.template_id) {
            Some(Fault::Reply(text)) => text,
            Some(Fault::Transport(e)) => return Err(e),
            None => {
                let mut rng = self.request_rng(request);
                self.respond(request, &mut rng)?
            }
        };
        let usage = Usage { prompt_tokens: (prompt.len() / 4) as u64, completion_tokens: (text.len() / 4) as u64 };
        Ok(RawCompletion { text, usage })
    }
}

fn fenced(lang: &str, body: &str) -> String {
    format!("```{lang}\n{}\n```\n", body.trim_end())
}

fn parse_trend(s: &str) -> Option<Trend> {
    Trend::ALL.into_iter().find(|t| t.as_str() == s.trim())
}

fn drifted_theme(theme: Theme, p: f64, rng: &mut ChaCha8Rng) -> Theme {
    if rng.random_bool(p) {
        let others: Vec<Theme> = Theme::ALL.into_iter().filter(|t| *t != theme).collect();
        others[rng.random_range(0..others.len())]
    } else {
        theme
    }
}

/// Reads `"2. bar (Bar chart); 7 bar groups; increasing trend; parameters: ..."`.
fn parse_cell_line(line: &str) -> Option<(ChartType, usize, Trend)> {
    let (_, rest) = line.split_once(". ")?;
    let (ty, rest) = rest.split_once(" (")?;
    let mut fields = rest.splitn(4, "; ");
    fields.next()?;
    let count = fields.next()?.split_whitespace().next()?.parse().ok()?;
    let trend = parse_trend(fields.next()?.strip_suffix(" trend")?)?;
    Some((ChartType::from_str(ty).ok()?, count, trend))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{parse_structured, ChartPayload, Gateway, SchemaId};

    fn gen_request(seed: &str) -> PromptRequest {
        let ty = ChartType::Line;
        PromptRequest::new(TemplateId::SinglePlotGen)
            .slot("theme", "Physics")
            .slot("chart_type", ty.as_str())
            .slot("chart_description", ty.display_name())
            .slot("parameter_description", ty.parameter_description())
            .slot("element_count", "8")
            .slot("element_noun", ty.bounds().noun)
            .slot("trend", "increasing")
            .slot("few_shot_examples", "")
            .slot("request_id", seed)
    }

    #[test]
    fn deterministic_per_request() {
        let gw = Gateway::stub(3);
        let a = gw.complete(&gen_request("a")).unwrap().text;
        assert_eq!(a, gw.complete(&gen_request("a")).unwrap().text);
        assert_ne!(a, gw.complete(&gen_request("b")).unwrap().text);
        assert_ne!(a, Gateway::stub(4).complete(&gen_request("a")).unwrap().text);
    }

    #[test]
    fn generation_reply_parses() {
        let gw = Gateway::stub(0);
        let c = gw.complete(&gen_request("x")).unwrap();
        let p: ChartPayload = parse_structured(&c, SchemaId::ChartPayload).unwrap().into_typed().unwrap();
        assert!(p.series.iter().all(|s| s.y.len() == 8));
    }

    #[test]
    fn faults_are_served_then_cleared() {
        let stub = StubBackend::new(0).with_fault(TemplateId::SinglePlotGen, "not json", 1);
        let gw = Gateway::new(std::sync::Arc::new(stub));
        assert_eq!(gw.complete(&gen_request("x")).unwrap().text, "not json");
        assert!(gw.complete(&gen_request("x")).unwrap().text.starts_with("```json"));
    }

    #[test]
    fn cell_lines() {
        let line = "2. bar (Bar chart); 7 bar groups; decreasing trend; parameters: series: a; b.";
        assert_eq!(parse_cell_line(line), Some((ChartType::Bar, 7, Trend::Decreasing)));
        assert_eq!(parse_cell_line("garbage"), None);
    }
}
