//! Prompt template catalog. Slots are written `{{name}}`; every marker in a
//! template is a required slot.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GatewayError, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    SinglePlotGen,
    SubplotGen,
    JointFigureGen,
    SingleDiversify,
    MultiDiversify,
    FigsizePostprocess,
    RateVisualClarity,
    RateSemanticCoherence,
    QaDescriptive,
    QaReasoning,
    EvalJudge,
}

impl TemplateId {
    pub const ALL: [TemplateId; 11] = [
        TemplateId::SinglePlotGen,
        TemplateId::SubplotGen,
        TemplateId::JointFigureGen,
        TemplateId::SingleDiversify,
        TemplateId::MultiDiversify,
        TemplateId::FigsizePostprocess,
        TemplateId::RateVisualClarity,
        TemplateId::RateSemanticCoherence,
        TemplateId::QaDescriptive,
        TemplateId::QaReasoning,
        TemplateId::EvalJudge,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::SinglePlotGen => "single_plot_gen",
            TemplateId::SubplotGen => "subplot_gen",
            TemplateId::JointFigureGen => "joint_figure_gen",
            TemplateId::SingleDiversify => "single_diversify",
            TemplateId::MultiDiversify => "multi_diversify",
            TemplateId::FigsizePostprocess => "figsize_postprocess",
            TemplateId::RateVisualClarity => "rate_visual_clarity",
            TemplateId::RateSemanticCoherence => "rate_semantic_coherence",
            TemplateId::QaDescriptive => "qa_descriptive",
            TemplateId::QaReasoning => "qa_reasoning",
            TemplateId::EvalJudge => "eval_judge",
        }
    }

    /// Generation templates sample at 1.0; rating and judging run at 0.
    pub fn default_temperature(self) -> f64 {
        match self {
            TemplateId::RateVisualClarity | TemplateId::RateSemanticCoherence | TemplateId::EvalJudge => 0.0,
            _ => 1.0,
        }
    }

    pub fn text(self) -> &'static str {
        match self {
            TemplateId::SinglePlotGen => SINGLE_PLOT_GEN,
            TemplateId::SubplotGen => SUBPLOT_GEN,
            TemplateId::JointFigureGen => JOINT_FIGURE_GEN,
            TemplateId::SingleDiversify => SINGLE_DIVERSIFY,
            TemplateId::MultiDiversify => MULTI_DIVERSIFY,
            TemplateId::FigsizePostprocess => FIGSIZE_POSTPROCESS,
            TemplateId::RateVisualClarity => RATE_VISUAL_CLARITY,
            TemplateId::RateSemanticCoherence => RATE_SEMANTIC_COHERENCE,
            TemplateId::QaDescriptive => QA_DESCRIPTIVE,
            TemplateId::QaReasoning => QA_REASONING,
            TemplateId::EvalJudge => EVAL_JUDGE,
        }
    }

    /// Slot names in order of first appearance.
    pub fn slots(self) -> Vec<&'static str> {
        let mut out: Vec<&'static str> = Vec::new();
        let text = self.text();
        let mut rest = text;
        while let Some(start) = rest.find("{{") {
            let after = &rest[start + 2..];
            let Some(end) = after.find("}}") else { break };
            let name = &after[..end];
            if !out.contains(&name) {
                out.push(name);
            }
            rest = &after[end + 2..];
        }
        out
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| ParseError::UnknownName { kind: "template", value: s.to_string() })
    }
}

/// Expands a template. Fails on the first slot without a value.
pub fn render_prompt(template: TemplateId, slots: &BTreeMap<String, String>) -> Result<String, GatewayError> {
    let text = template.text();
    let mut out = String::with_capacity(text.len() + 256);
    let mut rest = text;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after.find("}}").expect("templates close every marker");
        let name = &after[..end];
        let value = slots.get(name).ok_or_else(|| GatewayError::MissingSlot { template, slot: name.to_string() })?;
        out.push_str(value);
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    Ok(out)
}

const SINGLE_PLOT_GEN: &str = r#"You are preparing data for a scientific chart in the field of {{theme}}.

Chart function: {{chart_type}} ({{chart_description}})
Parameters the function accepts:
{{parameter_description}}

Requirements:
- Invent realistic data that a researcher in {{theme}} could plausibly publish.
- Use {{element_count}} {{element_noun}}.
- The values should follow an overall {{trend}} pattern where the chart type allows it.
- Write a specific title and axis labels (with units where they make sense).
- Styling may set colors (#rrggbb), markers, line_styles, legend_loc, alpha, line_width, grid and colormap; nothing else.
- Do not write plotting code. Only supply the data and arguments.

Reply with a single fenced json block of the form
{"title": ..., "x_label": ..., "y_label": ..., "series": [{"label": ..., "x": [...], "y": [...], "aux": {...}, "role": "base"}], "style": {...}, "annotations": []}

Examples for this chart function:
{{few_shot_examples}}

Request reference: {{request_id}}
"#;

const SUBPLOT_GEN: &str = r#"You are preparing data for subplot {{cell_number}} of {{cell_count}} in a figure with layout {{layout}} about {{theme}}.

Chart function for this subplot: {{chart_type}} ({{chart_description}})
Parameters the function accepts:
{{parameter_description}}

Subplots generated so far (titles, axis labels and data tables):
{{prior_subplots}}

Requirements:
- Stay on the same {{theme}} topic as the earlier subplots and present a complementary view of it; reuse their entities or quantities where natural.
- Use {{element_count}} {{element_noun}}.
- The values should follow an overall {{trend}} pattern where the chart type allows it.
- Write a specific subplot title and axis labels.
- Styling may set colors (#rrggbb), markers, line_styles, legend_loc, alpha, line_width, grid and colormap; nothing else.
- Do not write plotting code. Only supply the data and arguments.

Reply with a single fenced json block of the form
{"title": ..., "x_label": ..., "y_label": ..., "series": [{"label": ..., "x": [...], "y": [...], "aux": {...}, "role": "base"}], "style": {...}, "annotations": []}

Examples for this chart function:
{{few_shot_examples}}

Request reference: {{request_id}}
"#;

const JOINT_FIGURE_GEN: &str = r#"You are preparing a complete figure with layout {{layout}} about {{theme}}, writing the data and arguments of every subplot in one pass.

Subplot chart functions, in reading order:
{{cell_types}}

Requirements:
- Every subplot covers the {{theme}} topic.
- Values should follow an overall {{trend}} pattern where the chart type allows it.
- Styling may set colors (#rrggbb), markers, line_styles, legend_loc, alpha, line_width, grid and colormap; nothing else.

Reply with a single fenced json block of the form
{"subplots": [{"title": ..., "x_label": ..., "y_label": ..., "series": [...], "style": {...}, "annotations": []}, ...]}
with exactly one entry per subplot, in order.

Request reference: {{request_id}}
"#;

const SINGLE_DIVERSIFY: &str = r#"Below is a plotting program that renders one chart.

Modify the program to apply this visual change: {{strategy}}.

Rules:
- Change presentation details only. Every data value in the program must stay exactly as it is.
- Keep the figure size, dpi and the output file name unchanged.
- The program must still run on its own and save exactly one image.

Reply with the complete modified program in a single fenced python block.

```python
{{program}}
```
"#;

const MULTI_DIVERSIFY: &str = r#"Below is a plotting program that renders a figure of combined subplots with layout {{layout}}.

Modify the program to apply this visual change to the figure as a whole: {{strategy}}.

Rules:
- Apply the change consistently across all subplots so the figure stays visually coherent.
- Change presentation details only. Every data value in the program must stay exactly as it is.
- You may use an additional styling library such as seaborn if it is installed.
- Keep the figure size, dpi and the output file name unchanged.
- The program must still run on its own and save exactly one image.

Reply with the complete modified program in a single fenced python block.

```python
{{program}}
```
"#;

const FIGSIZE_POSTPROCESS: &str = r#"The plotting program below currently renders an image of {{width_px}} x {{height_px}} pixels.
Text in images with very large resolutions or extreme aspect ratios becomes too small or distorted.

Adjust only the FIGSIZE and DPI assignments so that the rendered image satisfies:
{{target}}

Leave every other line of the program untouched. Reply with the complete program in a single fenced python block.

```python
{{program}}
```
"#;

const RATE_VISUAL_CLARITY: &str = r#"You are reviewing a chart image for visual clarity. The figure layout is {{layout}}.

Score it on a 1 to 5 scale:
5 - every element is legible, nothing overlaps, space is well used.
4 - minor issues that do not hinder reading.
3 - noticeable clutter, crowding or blank regions, but the data can still be read.
2 - large blank areas or overlapping elements make parts hard to read.
1 - the chart is unreadable.

Consider readability of text, appropriate use of visual elements and absence of clutter.{{layout_criteria}}

Reply with a fenced json block: {"score": <integer 1-5>, "reason": "<one sentence>"}
"#;

const RATE_SEMANTIC_COHERENCE: &str = r#"You are reviewing a chart image for semantic coherence with the theme "{{theme}}". The figure layout is {{layout}}.

Text elements found in the chart:
{{figure_text}}

Score it on a 1 to 5 scale:
5 - every title, label and data series clearly belongs to {{theme}} and tells one consistent story.
4 - consistent with small lapses.
3 - partly related to the theme.
2 - mostly unrelated to the theme or internally contradictory.
1 - no recognisable connection to the theme.{{layout_criteria}}

Reply with a fenced json block: {"score": <integer 1-5>, "reason": "<one sentence>"}
"#;

const QA_DESCRIPTIVE: &str = r#"You are writing descriptive question-answer pairs about the attached chart image (layout {{layout}}).
You also receive the program that drew it and its underlying data so that your answers are exact.

Program:
```python
{{program}}
```

Data:
```json
{{figure_data}}
```

Write {{count}} questions about directly visible elements, covering:
- textual content (titles, axis labels, legend entries),
- numerical content (specific values, counts of elements),
- graphical content (chart types, colors, arrangement of subplots).
Each question must be answerable from the image alone. Give only the final answer, no explanation.
Rate your confidence that each answer is correct from 1 (unsure) to 5 (certain).

Reply with a fenced json block: {"qas": [{"question": ..., "answer": ..., "category": "textual|numerical|graphical", "confidence": <1-5>}, ...]}
"#;

const QA_REASONING: &str = r#"You are writing reasoning question-answer pairs about the attached chart image (layout {{layout}}).
You also receive the program that drew it and its underlying data so that your answers are exact.

Program:
```python
{{program}}
```

Data:
```json
{{figure_data}}
```

Write {{count}} questions that require analysis of the data: comparisons, differences, aggregates, trends or multi-step deductions, possibly across subplots.
Each question must be answerable from the image alone.
For each question first write a step-by-step rationale, then the final answer.
Rate your confidence that each answer is correct from 1 (unsure) to 5 (certain).

Reply with a fenced json block: {"qas": [{"question": ..., "rationale": ..., "answer": ..., "category": "<short tag>", "confidence": <1-5>}, ...]}
"#;

const EVAL_JUDGE: &str = r#"Decide whether a model's answer to a chart question is correct.

Question: {{question}}
Reference answer: {{ground_truth}}
Model answer: {{prediction}}

Extract the final answer from the model answer and compare it with the reference.
For numerical answers, accept values within {{tolerance_pct}}% of the reference.
Ignore differences in formatting, capitalisation and units when the meaning is the same.

Reply with a fenced json block: {"verdict": "correct" | "incorrect"}
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slot_extraction() {
        let slots = TemplateId::EvalJudge.slots();
        assert_eq!(slots, vec!["question", "ground_truth", "prediction", "tolerance_pct"]);
        for t in TemplateId::ALL {
            assert!(!t.slots().is_empty(), "{t}");
        }
    }

    #[test]
    fn missing_slot_is_named() {
        let err = render_prompt(TemplateId::QaReasoning, &BTreeMap::new()).unwrap_err();
        match err {
            GatewayError::MissingSlot { template, slot } => {
                assert_eq!(template, TemplateId::QaReasoning);
                assert_eq!(slot, "layout");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn full_expansion_leaves_no_markers() {
        for t in TemplateId::ALL {
            let slots: BTreeMap<String, String> =
                t.slots().into_iter().map(|s| (s.to_string(), format!("<{s}>"))).collect();
            let text = render_prompt(t, &slots).unwrap();
            assert!(!text.contains("{{"), "{t}");
            assert!(!text.contains("}}"), "{t}");
        }
    }

    #[test]
    fn temperatures() {
        assert_eq!(TemplateId::SinglePlotGen.default_temperature(), 1.0);
        assert_eq!(TemplateId::RateVisualClarity.default_temperature(), 0.0);
        assert_eq!(TemplateId::EvalJudge.default_temperature(), 0.0);
    }
}
