//! Extraction of structured (JSON) payloads from free-form completions and
//! validation against the registered schemas.

use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::CompletionResult;
use crate::error::StructuredError;
use crate::model::{Annotation, DataSeries, Style, Trend};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaId {
    ChartPayload,
    FigurePayload,
    Rating,
    QaList,
    Verdict,
}

impl SchemaId {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemaId::ChartPayload => "chart_payload",
            SchemaId::FigurePayload => "figure_payload",
            SchemaId::Rating => "rating",
            SchemaId::QaList => "qa_list",
            SchemaId::Verdict => "verdict",
        }
    }

    fn check(self, value: &Value) -> Result<(), String> {
        match self {
            SchemaId::ChartPayload => typed::<ChartPayload>(value).and_then(|p| p.check()),
            SchemaId::FigurePayload => typed::<FigurePayload>(value).and_then(|p| {
                if p.subplots.is_empty() {
                    return Err("subplots must be non-empty".into());
                }
                p.subplots.iter().try_for_each(ChartPayload::check)
            }),
            SchemaId::Rating => typed::<RatingPayload>(value).and_then(|p| in_scale("score", p.score)),
            SchemaId::QaList => typed::<QaListPayload>(value)
                .and_then(|p| p.qas.iter().try_for_each(|q| in_scale("confidence", q.confidence))),
            SchemaId::Verdict => typed::<VerdictPayload>(value).map(|_| ()),
        }
    }
}

impl fmt::Display for SchemaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn typed<T: DeserializeOwned>(value: &Value) -> Result<T, String> {
    serde_json::from_value(value.clone()).map_err(|e| e.to_string())
}

fn in_scale(field: &str, v: i64) -> Result<(), String> {
    if (1..=5).contains(&v) {
        Ok(())
    } else {
        Err(format!("{field} {v} outside the 1-5 scale"))
    }
}

/// Data and arguments for one chart, as returned by a generation prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartPayload {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<DataSeries>,
    #[serde(default)]
    pub style: Style,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<Annotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trend_hint: Option<Trend>,
}

impl ChartPayload {
    fn check(&self) -> Result<(), String> {
        if self.series.is_empty() {
            return Err("series must be non-empty".into());
        }
        if self.title.trim().is_empty() {
            return Err("title must be non-empty".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigurePayload {
    pub subplots: Vec<ChartPayload>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingPayload {
    pub score: i64,
    #[serde(default)]
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaItemPayload {
    pub question: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    pub confidence: i64,
    /// Path of the spec field the answer was read from, when there is one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaListPayload {
    pub qas: Vec<QaItemPayload>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictLabel {
    Correct,
    Incorrect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictPayload {
    pub verdict: VerdictLabel,
}

/// A parsed block that passed schema validation.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredPayload {
    pub schema: SchemaId,
    pub value: Value,
}

impl StructuredPayload {
    pub fn into_typed<T: DeserializeOwned>(self) -> Result<T, StructuredError> {
        serde_json::from_value(self.value)
            .map_err(|e| StructuredError::Schema { schema: self.schema.as_str(), reason: e.to_string() })
    }
}

/// Finds the first well-formed JSON block in the completion and validates it.
pub fn parse_structured(completion: &CompletionResult, schema: SchemaId) -> Result<StructuredPayload, StructuredError> {
    parse_structured_text(&completion.text, schema)
}

pub fn parse_structured_text(text: &str, schema: SchemaId) -> Result<StructuredPayload, StructuredError> {
    let value = first_json_block(text).ok_or(StructuredError::NoBlock)?;
    schema.check(&value).map_err(|reason| StructuredError::Schema { schema: schema.as_str(), reason })?;
    Ok(StructuredPayload { schema, value })
}

/// Scans fenced blocks first, then bare balanced `{...}` / `[...]` spans.
pub fn first_json_block(text: &str) -> Option<Value> {
    for block in fenced_blocks(text) {
        if let Ok(v) = serde_json::from_str::<Value>(block.body.trim()) {
            if v.is_object() || v.is_array() {
                return Some(v);
            }
        }
    }
    let bytes = text.as_bytes();
    let mut start = 0;
    while start < bytes.len() {
        let Some(off) = text[start..].find(['{', '[']) else { break };
        let open = start + off;
        if let Some(close) = balanced_end(text, open) {
            if let Ok(v) = serde_json::from_str::<Value>(&text[open..=close]) {
                return Some(v);
            }
        }
        start = open + 1;
    }
    None
}

/// Body of the first fenced block with the given language tag (or untagged).
pub fn first_code_block<'a>(text: &'a str, lang: &str) -> Option<&'a str> {
    let blocks = fenced_blocks(text);
    blocks
        .iter()
        .find(|b| b.lang.eq_ignore_ascii_case(lang))
        .or_else(|| blocks.iter().find(|b| b.lang.is_empty()))
        .map(|b| b.body)
}

struct Fenced<'a> {
    lang: &'a str,
    body: &'a str,
}

fn fenced_blocks(text: &str) -> Vec<Fenced<'_>> {
    let mut out = Vec::new();
    let mut rest = text;
    let mut base = 0;
    while let Some(open) = rest.find("```") {
        let after_ticks = base + open + 3;
        let line_end = text[after_ticks..].find('\n').map(|i| after_ticks + i);
        let Some(line_end) = line_end else { break };
        let lang = text[after_ticks..line_end].trim();
        let body_start = line_end + 1;
        let Some(close_rel) = find_closing_fence(&text[body_start..]) else { break };
        let body = &text[body_start..body_start + close_rel];
        out.push(Fenced { lang, body });
        let next = body_start + close_rel + 3;
        base = next;
        rest = &text[next..];
    }
    out
}

/// Closing fence: three backticks at the start of a line.
fn find_closing_fence(s: &str) -> Option<usize> {
    if s.starts_with("```") {
        return Some(0);
    }
    let mut idx = 0;
    while let Some(nl) = s[idx..].find('\n') {
        let pos = idx + nl + 1;
        if s[pos..].starts_with("```") {
            return Some(pos);
        }
        idx = pos;
    }
    None
}

fn balanced_end(text: &str, open: usize) -> Option<usize> {
    let mut depth = 0i32;
    let mut in_str = false;
    let mut escaped = false;
    for (i, ch) in text[open..].char_indices() {
        if in_str {
            match (escaped, ch) {
                (true, _) => escaped = false,
                (false, '\\') => escaped = true,
                (false, '"') => in_str = false,
                _ => {}
            }
            continue;
        }
        match ch {
            '"' => in_str = true,
            '{' | '[' => depth += 1,
            '}' | ']' => {
                depth -= 1;
                if depth == 0 {
                    return Some(open + i);
                }
            }
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_fenced_block_amid_chatter() {
        let text = "Sure! Here you go:\n```json\n{\"score\": 4, \"reason\": \"fine\"}\n```\nAnything else?";
        let p = parse_structured_text(text, SchemaId::Rating).unwrap();
        assert_eq!(p.value["score"], 4);
    }

    #[test]
    fn falls_back_to_bare_balanced_object() {
        let text = "verdict follows {\"verdict\": \"correct\"} thanks";
        let p = parse_structured_text(text, SchemaId::Verdict).unwrap();
        let v: VerdictPayload = p.into_typed().unwrap();
        assert_eq!(v.verdict, VerdictLabel::Correct);
    }

    #[test]
    fn braces_inside_strings_do_not_confuse_the_scanner() {
        let text = r#"note {"reason": "a } inside", "score": 2} end"#;
        assert_eq!(parse_structured_text(text, SchemaId::Rating).unwrap().value["score"], 2);
    }

    #[test]
    fn refusal_has_no_block() {
        assert_eq!(parse_structured_text("sorry, I cannot", SchemaId::Rating), Err(StructuredError::NoBlock));
        assert_eq!(parse_structured_text("score: banana", SchemaId::Rating), Err(StructuredError::NoBlock));
    }

    #[test]
    fn confidence_out_of_scale_is_schema_violation() {
        let text = r#"```json
{"qas": [{"question": "q", "answer": "a", "confidence": 7}]}
```"#;
        match parse_structured_text(text, SchemaId::QaList) {
            Err(StructuredError::Schema { schema, reason }) => {
                assert_eq!(schema, "qa_list");
                assert!(reason.contains('7'), "{reason}");
            }
            other => panic!("expected schema violation, got {other:?}"),
        }
    }

    #[test]
    fn code_block_by_language() {
        let text = "x\n```json\n{}\n```\n```python\nprint(1)\n```\n";
        assert_eq!(first_code_block(text, "python"), Some("print(1)\n"));
        assert_eq!(first_code_block("```\nraw\n```", "python"), Some("raw\n"));
        assert_eq!(first_code_block("no code", "python"), None);
    }
}
