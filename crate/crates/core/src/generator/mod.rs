//! Single-plot spec generation and conditional multi-subplot composition.

pub mod synth;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::GenerationError;
use crate::gateway::{
    parse_structured, ChartPayload, FigurePayload, Gateway, PromptRequest, SchemaId, TemplateId, STRUCTURED_TRIES,
};
use crate::model::{
    validate_chart_spec, validate_figure_spec, ChartSpec, ChartType, FigureSpec, GenerationTask, Layout, Subplot,
    Theme, Trend,
};
use crate::stats::{agrees_with_direction, spearman_vs_index};
use crate::util::{derive_seed, rng_from, round_to, sha256_hex};

pub const DEFAULT_DPI: u32 = 100;
pub const FIGSIZE_WIDTH: (f64, f64) = (6.0, 14.0);
pub const FIGSIZE_HEIGHT: (f64, f64) = (4.0, 10.0);
const FEW_SHOT_SEEDS: [u64; 2] = [0, 1];

/// Relative sampling weights of the multi-subplot layouts, tuned so the mean
/// cell count over the default set is close to 4.
pub const LAYOUT_WEIGHTS: [((u32, u32), u32); 12] = [
    ((1, 2), 11),
    ((2, 1), 8),
    ((1, 3), 12),
    ((3, 1), 10),
    ((2, 2), 28),
    ((1, 4), 5),
    ((4, 1), 4),
    ((2, 3), 7),
    ((3, 2), 7),
    ((2, 4), 3),
    ((4, 2), 3),
    ((3, 3), 2),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationMode {
    #[default]
    Conditional,
    Parallel,
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub themes: Vec<Theme>,
    pub chart_types: Vec<ChartType>,
    /// Layouts allowed for multi-subplot figures.
    pub layouts: Vec<Layout>,
    pub dpi: u32,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            themes: Theme::ALL.to_vec(),
            chart_types: ChartType::ALL.to_vec(),
            layouts: Layout::REFERENCE.into_iter().filter(|l| !l.is_single()).collect(),
            dpi: DEFAULT_DPI,
        }
    }
}

impl GeneratorConfig {
    fn check_single(&self) -> Result<(), GenerationError> {
        if self.themes.is_empty() {
            return Err(GenerationError::Config("no themes allowed".into()));
        }
        if self.chart_types.is_empty() {
            return Err(GenerationError::Config("no chart types allowed".into()));
        }
        Ok(())
    }

    /// Types a subplot cell may take: overlays are whole-chart types only.
    fn cell_types(&self) -> Vec<ChartType> {
        self.chart_types.iter().copied().filter(|t| !t.is_overlay()).collect()
    }
}

pub fn layout_weight(layout: Layout) -> u32 {
    LAYOUT_WEIGHTS.iter().find(|((r, c), _)| *r == layout.rows && *c == layout.cols).map(|(_, w)| *w).unwrap_or(1)
}

pub fn sample_generation_task(seed: u64, config: &GeneratorConfig) -> Result<GenerationTask, GenerationError> {
    config.check_single()?;
    let mut rng = rng_from(derive_seed(seed, &["task"]));
    let theme = *config.themes.choose(&mut rng).expect("checked non-empty");
    let chart_type = *config.chart_types.choose(&mut rng).expect("checked non-empty");
    Ok(sampled_task(&mut rng, theme, chart_type, derive_seed(seed, &["task", "child"])))
}

fn sampled_task<R: Rng>(rng: &mut R, theme: Theme, chart_type: ChartType, seed: u64) -> GenerationTask {
    let trend = *Trend::ALL.choose(rng).expect("three trends");
    let b = chart_type.bounds();
    let element_count = rng.random_range(b.min..=b.max);
    GenerationTask { theme, chart_type, trend, element_count, seed }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigurePlan {
    pub layout: Layout,
    pub cell_types: Vec<ChartType>,
    pub theme: Theme,
    pub seed: u64,
    #[serde(default)]
    pub mode: GenerationMode,
}

impl FigurePlan {
    pub fn is_valid(&self) -> bool {
        self.layout.is_valid() && self.cell_types.len() == self.layout.cells()
    }

    /// Trend and element count of one cell, derived from the plan seed.
    pub fn cell_task(&self, cell: usize) -> GenerationTask {
        let seed = derive_seed(self.seed, &["cell", &cell.to_string()]);
        let mut rng = rng_from(seed);
        sampled_task(&mut rng, self.theme, self.cell_types[cell], seed)
    }
}

pub fn plan_multi_figure(seed: u64, config: &GeneratorConfig) -> Result<FigurePlan, GenerationError> {
    if config.themes.is_empty() {
        return Err(GenerationError::Config("no themes allowed".into()));
    }
    let layouts: Vec<Layout> = config.layouts.iter().copied().filter(|l| !l.is_single() && l.is_valid()).collect();
    if layouts.is_empty() {
        return Err(GenerationError::Config("no multi-subplot layouts allowed".into()));
    }
    let types = config.cell_types();
    if types.is_empty() {
        return Err(GenerationError::Config("no base chart types allowed for subplots".into()));
    }
    let mut rng = rng_from(derive_seed(seed, &["plan"]));
    let layout = *layouts.choose_weighted(&mut rng, |l| layout_weight(*l)).expect("non-empty, positive weights");
    let theme = *config.themes.choose(&mut rng).expect("checked non-empty");
    let pair = [*types.choose(&mut rng).expect("non-empty"), *types.choose(&mut rng).expect("non-empty")];
    let cells = layout.cells();
    let mut cell_types: Vec<ChartType> = (0..cells).map(|_| *pair.choose(&mut rng).expect("pair")).collect();
    if pair[0] != pair[1] {
        for want in pair {
            if !cell_types.contains(&want) {
                let at = rng.random_range(0..cells);
                cell_types[at] = want;
            }
        }
    }
    Ok(FigurePlan {
        layout,
        cell_types,
        theme,
        seed: derive_seed(seed, &["plan", "child"]),
        mode: GenerationMode::Conditional,
    })
}

/// Figure size in inches. Multi-subplot figures lean toward the grid's aspect.
pub fn sample_figsize(seed: u64, layout: Layout) -> (f64, f64) {
    let mut rng = rng_from(derive_seed(seed, &["figsize"]));
    let w = rng.random_range(FIGSIZE_WIDTH.0..=FIGSIZE_WIDTH.1);
    let h = if layout.is_single() {
        rng.random_range(FIGSIZE_HEIGHT.0..=FIGSIZE_HEIGHT.1)
    } else {
        let aspect = 1.4 * layout.cols as f64 / layout.rows as f64;
        (w / aspect * rng.random_range(0.9..1.1)).clamp(FIGSIZE_HEIGHT.0, FIGSIZE_HEIGHT.1)
    };
    (round_to(w, 2), round_to(h, 2))
}

pub fn figure_id_for<T: Serialize>(kind: &str, what: &T) -> String {
    let json = serde_json::to_string(what).expect("serializable");
    sha256_hex(format!("{kind}:{json}"))[..16].to_string()
}

/// Two worked examples of the payload for one chart function.
pub fn few_shot_examples(ty: ChartType) -> String {
    FEW_SHOT_SEEDS
        .iter()
        .map(|&seed| {
            let mut rng = rng_from(derive_seed(seed, &["few-shot", ty.as_str()]));
            let theme = Theme::ALL[(seed as usize * 7 + ty as usize) % Theme::ALL.len()];
            let trend = if ty.carries_trend() { Trend::ALL[seed as usize % 2] } else { Trend::Stable };
            let payload = synth::synthesize_chart(ty, theme, theme, trend, ty.bounds().min, &mut rng);
            format!("Example ({theme}, {trend}):\n{}", serde_json::to_string(&payload).expect("serializable"))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// One prompt/completion exchange, recorded for provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTrace {
    pub template_id: TemplateId,
    pub prompt_digest: String,
    pub completion_digest: String,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedFigure {
    pub spec: FigureSpec,
    pub traces: Vec<PromptTrace>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GenerationContext {
    pub prior_specs: Vec<ChartSpec>,
}

/// Requests `request` until a payload parses, validates and honours the trend.
fn generate_with_retries<T>(
    gateway: &Gateway,
    request: &PromptRequest,
    schema: SchemaId,
    traces: &mut Vec<PromptTrace>,
    mut accept: impl FnMut(crate::gateway::StructuredPayload) -> Result<T, String>,
) -> Result<T, GenerationError> {
    let prompt_digest = sha256_hex(request.prompt()?);
    let mut last = String::new();
    for _ in 0..STRUCTURED_TRIES {
        let completion = gateway.complete(request)?;
        traces.push(PromptTrace {
            template_id: request.template_id,
            prompt_digest: prompt_digest.clone(),
            completion_digest: sha256_hex(&completion.text),
            attempts: completion.attempts_used,
        });
        match parse_structured(&completion, schema).map_err(|e| e.to_string()).and_then(&mut accept) {
            Ok(v) => return Ok(v),
            Err(e) => {
                log::debug!("{} rejected: {e}", request.template_id);
                last = e;
            }
        }
    }
    Err(GenerationError::Exhausted { attempts: STRUCTURED_TRIES, last })
}

fn payload_to_spec(p: ChartPayload, task: &GenerationTask) -> ChartSpec {
    ChartSpec {
        chart_type: task.chart_type,
        theme: task.theme,
        title: p.title,
        x_label: p.x_label,
        y_label: p.y_label,
        series: p.series,
        style: p.style,
        trend_hint: task.trend,
        annotations: p.annotations,
    }
}

/// Checks a spec against what the task asked for.
pub fn check_against_task(spec: &ChartSpec, task: &GenerationTask) -> Result<(), String> {
    let report = validate_chart_spec(spec);
    if !report.is_empty() {
        return Err(report.to_string());
    }
    if task.chart_type.carries_trend() && task.trend != Trend::Stable {
        let want = if task.trend == Trend::Increasing { 1.0 } else { -1.0 };
        for s in spec.base_series() {
            if s.y.len() >= 2 && !agrees_with_direction(spearman_vs_index(&s.y), want) {
                return Err(format!("series {:?} does not follow the {} trend", s.label, task.trend));
            }
        }
    }
    Ok(())
}

fn typed_chart(p: crate::gateway::StructuredPayload) -> Result<ChartPayload, String> {
    p.into_typed::<ChartPayload>().map_err(|e| e.to_string())
}

pub fn single_plot_request(task: &GenerationTask) -> PromptRequest {
    let b = task.chart_type.bounds();
    PromptRequest::new(TemplateId::SinglePlotGen)
        .slot("theme", task.theme.name())
        .slot("chart_type", task.chart_type.as_str())
        .slot("chart_description", task.chart_type.display_name())
        .slot("parameter_description", task.chart_type.parameter_description())
        .slot("element_count", task.element_count.to_string())
        .slot("element_noun", b.noun)
        .slot("trend", task.trend.as_str())
        .slot("few_shot_examples", few_shot_examples(task.chart_type))
        .slot("request_id", format!("{:016x}", task.seed))
}

pub fn generate_single_spec_traced(
    task: &GenerationTask,
    gateway: &Gateway,
    traces: &mut Vec<PromptTrace>,
) -> Result<ChartSpec, GenerationError> {
    if !task.is_valid() {
        return Err(GenerationError::Precondition(format!(
            "element count {} outside {}..={} for {}",
            task.element_count,
            task.chart_type.bounds().min,
            task.chart_type.bounds().max,
            task.chart_type
        )));
    }
    let request = single_plot_request(task);
    generate_with_retries(gateway, &request, SchemaId::ChartPayload, traces, |p| {
        let spec = payload_to_spec(typed_chart(p)?, task);
        check_against_task(&spec, task)?;
        Ok(spec)
    })
}

pub fn generate_single_spec(task: &GenerationTask, gateway: &Gateway) -> Result<ChartSpec, GenerationError> {
    generate_single_spec_traced(task, gateway, &mut Vec::new())
}

/// Text block describing earlier subplots: titles, labels and full data.
pub fn serialize_prior_subplots(prior: &[ChartSpec]) -> String {
    if prior.is_empty() {
        return "(none yet)".to_string();
    }
    prior
        .iter()
        .enumerate()
        .map(|(i, s)| {
            format!(
                "Subplot {} ({}): title {:?}; x label {:?}; y label {:?}\ndata: {}",
                i + 1,
                s.chart_type,
                s.title,
                s.x_label,
                s.y_label,
                serde_json::to_string(&s.series).expect("serializable")
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn subplot_request(plan: &FigurePlan, prior: &[ChartSpec], cell: usize) -> PromptRequest {
    let task = plan.cell_task(cell);
    let ty = task.chart_type;
    PromptRequest::new(TemplateId::SubplotGen)
        .slot("cell_number", (cell + 1).to_string())
        .slot("cell_count", plan.layout.cells().to_string())
        .slot("layout", plan.layout.to_string())
        .slot("theme", plan.theme.name())
        .slot("chart_type", ty.as_str())
        .slot("chart_description", ty.display_name())
        .slot("parameter_description", ty.parameter_description())
        .slot("prior_subplots", serialize_prior_subplots(prior))
        .slot("element_count", task.element_count.to_string())
        .slot("element_noun", ty.bounds().noun)
        .slot("trend", task.trend.as_str())
        .slot("few_shot_examples", few_shot_examples(ty))
        .slot("request_id", format!("{:016x}", task.seed))
}

fn subplot_spec(
    plan: &FigurePlan,
    prior: &[ChartSpec],
    cell: usize,
    gateway: &Gateway,
    traces: &mut Vec<PromptTrace>,
) -> Result<ChartSpec, GenerationError> {
    let task = plan.cell_task(cell);
    let request = subplot_request(plan, prior, cell);
    generate_with_retries(gateway, &request, SchemaId::ChartPayload, traces, |p| {
        let spec = payload_to_spec(typed_chart(p)?, &task);
        check_against_task(&spec, &task)?;
        Ok(spec)
    })
}

pub fn generate_conditional_spec(
    plan: &FigurePlan,
    ctx: &GenerationContext,
    cell_index: usize,
    gateway: &Gateway,
) -> Result<ChartSpec, GenerationError> {
    if ctx.prior_specs.len() != cell_index {
        return Err(GenerationError::Precondition(format!(
            "context holds {} subplots but cell {cell_index} was requested",
            ctx.prior_specs.len()
        )));
    }
    if cell_index >= plan.cell_types.len() {
        return Err(GenerationError::Precondition(format!("cell {cell_index} outside the plan")));
    }
    subplot_spec(plan, &ctx.prior_specs, cell_index, gateway, &mut Vec::new())
}

pub fn joint_request(plan: &FigurePlan) -> PromptRequest {
    let trend = plan.cell_task(0).trend;
    let cells = plan
        .cell_types
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let task = plan.cell_task(i);
            format!(
                "{}. {} ({}); {} {}; {} trend; parameters: {}",
                i + 1,
                t.as_str(),
                t.display_name(),
                task.element_count,
                t.bounds().noun,
                task.trend,
                t.parameter_description()
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    PromptRequest::new(TemplateId::JointFigureGen)
        .slot("layout", plan.layout.to_string())
        .slot("theme", plan.theme.name())
        .slot("cell_types", cells)
        .slot("trend", trend.as_str())
        .slot("request_id", format!("{:016x}", plan.seed))
}

pub fn generate_figure(plan: &FigurePlan, gateway: &Gateway, dpi: u32) -> Result<GeneratedFigure, GenerationError> {
    if !plan.is_valid() {
        return Err(GenerationError::Precondition(format!(
            "plan has {} cell types for layout {}",
            plan.cell_types.len(),
            plan.layout
        )));
    }
    let mut traces = Vec::new();
    let figsize = sample_figsize(plan.seed, plan.layout);
    let figure_id = figure_id_for("multi", plan);
    let specs: Vec<ChartSpec> = if plan.layout.is_single() {
        vec![generate_single_spec_traced(&plan.cell_task(0), gateway, &mut traces)?]
    } else {
        match plan.mode {
            GenerationMode::Conditional => {
                let mut prior = Vec::with_capacity(plan.layout.cells());
                for cell in 0..plan.layout.cells() {
                    let spec = subplot_spec(plan, &prior, cell, gateway, &mut traces)?;
                    prior.push(spec);
                }
                prior
            }
            GenerationMode::Parallel => (0..plan.layout.cells())
                .map(|cell| subplot_spec(plan, &[], cell, gateway, &mut traces))
                .collect::<Result<_, _>>()?,
            GenerationMode::Joint => {
                let request = joint_request(plan);
                generate_with_retries(gateway, &request, SchemaId::FigurePayload, &mut traces, |p| {
                    let fp: FigurePayload = p.into_typed().map_err(|e| e.to_string())?;
                    if fp.subplots.len() != plan.layout.cells() {
                        return Err(format!("{} subplots for {} cells", fp.subplots.len(), plan.layout.cells()));
                    }
                    fp.subplots
                        .into_iter()
                        .enumerate()
                        .map(|(cell, cp)| {
                            let task = plan.cell_task(cell);
                            let spec = payload_to_spec(cp, &task);
                            check_against_task(&spec, &task)?;
                            Ok(spec)
                        })
                        .collect()
                })?
            }
        }
    };
    let spec = FigureSpec {
        figure_id,
        layout: plan.layout,
        subplots: specs.into_iter().enumerate().map(|(cell, spec)| Subplot { cell, spec }).collect(),
        overall_title: None,
        figsize,
        dpi,
    };
    let report = validate_figure_spec(&spec);
    if !report.is_empty() {
        return Err(GenerationError::Exhausted { attempts: 1, last: report.to_string() });
    }
    Ok(GeneratedFigure { spec, traces })
}

/// A (1, 1) figure from one generation task.
pub fn generate_single_figure(
    task: &GenerationTask,
    gateway: &Gateway,
    dpi: u32,
) -> Result<GeneratedFigure, GenerationError> {
    let mut traces = Vec::new();
    let chart = generate_single_spec_traced(task, gateway, &mut traces)?;
    let spec = FigureSpec::single(figure_id_for("single", task), chart, sample_figsize(task.seed, Layout::SINGLE), dpi);
    Ok(GeneratedFigure { spec, traces })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_sampling_is_deterministic_and_respects_config() {
        let cfg = GeneratorConfig::default();
        assert_eq!(sample_generation_task(42, &cfg).unwrap(), sample_generation_task(42, &cfg).unwrap());
        let narrow =
            GeneratorConfig { themes: vec![Theme::Physics], chart_types: vec![ChartType::Line], ..cfg.clone() };
        for s in 0..50 {
            let t = sample_generation_task(s, &narrow).unwrap();
            assert_eq!((t.chart_type, t.theme), (ChartType::Line, Theme::Physics));
            assert!(t.is_valid());
        }
        let empty = GeneratorConfig { themes: vec![], ..cfg };
        assert!(matches!(sample_generation_task(1, &empty), Err(GenerationError::Config(_))));
    }

    #[test]
    fn default_layout_weights_average_about_four_cells() {
        let cfg = GeneratorConfig::default();
        let total: u32 = cfg.layouts.iter().map(|l| layout_weight(*l)).sum();
        let mean: f64 =
            cfg.layouts.iter().map(|l| layout_weight(*l) as f64 * l.cells() as f64).sum::<f64>() / total as f64;
        assert!((mean - 4.0).abs() < 0.1, "mean cells {mean}");
    }

    #[test]
    fn plans_use_both_sampled_types_and_no_overlays() {
        let cfg = GeneratorConfig::default();
        for s in 0..300 {
            let p = plan_multi_figure(s, &cfg).unwrap();
            assert!(p.is_valid());
            assert!(!p.layout.is_single());
            assert!(p.cell_types.iter().all(|t| !t.is_overlay()));
            let distinct: std::collections::BTreeSet<_> = p.cell_types.iter().collect();
            assert!(distinct.len() <= 2);
        }
    }

    #[test]
    fn figsize_within_ranges() {
        for s in 0..200 {
            for l in Layout::REFERENCE {
                let (w, h) = sample_figsize(s, l);
                assert!((FIGSIZE_WIDTH.0..=FIGSIZE_WIDTH.1).contains(&w));
                assert!((FIGSIZE_HEIGHT.0..=FIGSIZE_HEIGHT.1).contains(&h));
            }
        }
    }

    #[test]
    fn few_shot_has_two_examples() {
        for t in ChartType::ALL {
            assert_eq!(few_shot_examples(t).matches("Example (").count(), 2);
        }
    }
}
