//! Program-level visual diversification and the figsize/dpi post-processing
//! pass.

mod transforms;

use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

pub use transforms::{overall_title_text, stub_transform};

use crate::error::{DiversifyError, GatewayError, ParseError, RenderError};
use crate::gateway::{first_code_block, Gateway, PromptRequest, TemplateId};
use crate::model::Layout;
use crate::render::{data_preserved, read_geometry, set_geometry, ImageArtifact, PlotProgram};
use crate::util::rng_from;

/// Flag set on a figure whose diversification fell back to the original program.
pub const FLAG_DIVERSIFY_FALLBACK: &str = "DIVERSIFY_FALLBACK";
/// Flag set when post-processing failed and the prior geometry was kept.
pub const FLAG_POSTPROCESS_FALLBACK: &str = "POSTPROCESS_FALLBACK";

/// Pixel envelope the post-processing pass steers toward.
pub const WIDTH_RANGE: (u32, u32) = (800, 2000);
/// Width / height.
pub const ASPECT_RANGE: (f64, f64) = (0.5, 2.5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    ArrowsAnnotationsHighlights,
    FontColorStyleSize,
    GradientFillAreaShading,
    RemoveAxisBorders,
    ZoomInInsets,
    OverallTitle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureKind {
    Single,
    Multi,
}

impl FigureKind {
    pub fn of(layout: Layout) -> Self {
        if layout.is_single() {
            FigureKind::Single
        } else {
            FigureKind::Multi
        }
    }
}

impl Strategy {
    pub const SINGLE: [Strategy; 5] = [
        Strategy::ArrowsAnnotationsHighlights,
        Strategy::FontColorStyleSize,
        Strategy::GradientFillAreaShading,
        Strategy::RemoveAxisBorders,
        Strategy::ZoomInInsets,
    ];
    pub const MULTI: [Strategy; 6] = [
        Strategy::ArrowsAnnotationsHighlights,
        Strategy::FontColorStyleSize,
        Strategy::GradientFillAreaShading,
        Strategy::RemoveAxisBorders,
        Strategy::ZoomInInsets,
        Strategy::OverallTitle,
    ];

    pub fn applicable(kind: FigureKind) -> &'static [Strategy] {
        match kind {
            FigureKind::Single => &Self::SINGLE,
            FigureKind::Multi => &Self::MULTI,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::ArrowsAnnotationsHighlights => "arrows_annotations_highlights",
            Strategy::FontColorStyleSize => "font_color_style_size",
            Strategy::GradientFillAreaShading => "gradient_fill_area_shading",
            Strategy::RemoveAxisBorders => "remove_axis_borders",
            Strategy::ZoomInInsets => "zoom_in_insets",
            Strategy::OverallTitle => "overall_title",
        }
    }

    /// The change described to the model.
    pub fn instruction(self) -> &'static str {
        match self {
            Strategy::ArrowsAnnotationsHighlights => {
                "add arrows, text annotations, threshold lines or highlighted regions that point out notable features of the data"
            }
            Strategy::FontColorStyleSize => "change the font family, font sizes, text colors and the color palette of the data elements",
            Strategy::GradientFillAreaShading => "add gradient fills, shaded areas under curves or a subtle gradient background",
            Strategy::RemoveAxisBorders => "remove some or all axis borders (spines) and simplify the tick marks",
            Strategy::ZoomInInsets => "add a zoomed-in inset that magnifies an interesting region of the data",
            Strategy::OverallTitle => "add one overall title for the whole figure that summarises what the subplots show together",
        }
    }

    pub fn from_instruction(text: &str) -> Option<Self> {
        Self::MULTI.into_iter().find(|s| s.instruction() == text.trim())
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::MULTI
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| ParseError::UnknownName { kind: "strategy", value: s.to_string() })
    }
}

/// Uniform draw from the strategies applicable to `kind`.
pub fn sample_strategy(seed: u64, kind: FigureKind) -> Strategy {
    *Strategy::applicable(kind).choose(&mut rng_from(seed)).expect("non-empty strategy set")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiversificationRecord {
    pub figure_id: String,
    pub strategy: Strategy,
    pub before_digest: String,
    pub after_digest: String,
    pub data_preserved: bool,
    /// Completions requested, including the retry.
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl DiversificationRecord {
    pub fn fell_back(&self) -> bool {
        self.flags.iter().any(|f| f == FLAG_DIVERSIFY_FALLBACK)
    }
}

/// Result of a diversification call. `artifact` is the render of the accepted
/// program, or `None` when the caller's original render stands.
#[derive(Debug, Clone)]
pub struct DiversifyOutcome {
    pub program: PlotProgram,
    pub record: DiversificationRecord,
    pub artifact: Option<ImageArtifact>,
}

/// Renders a candidate program; an error rejects it.
pub type RenderCheck<'a> = dyn Fn(&PlotProgram) -> Result<ImageArtifact, RenderError> + Sync + 'a;

pub fn diversify_request(program: &PlotProgram, strategy: Strategy, layout: Layout) -> PromptRequest {
    if layout.is_single() {
        PromptRequest::new(TemplateId::SingleDiversify)
            .slot("strategy", strategy.instruction())
            .slot("program", program.source.as_str())
    } else {
        PromptRequest::new(TemplateId::MultiDiversify)
            .slot("layout", layout.to_string())
            .slot("strategy", strategy.instruction())
            .slot("program", program.source.as_str())
    }
}

/// One completion turned into a candidate program, or the reason it was rejected.
fn candidate(gateway: &Gateway, request: &PromptRequest) -> Result<Result<String, String>, GatewayError> {
    match gateway.complete(request) {
        Ok(c) => {
            Ok(first_code_block(&c.text, "python").map(str::to_string).ok_or_else(|| "no python block".to_string()))
        }
        Err(e) if e.is_budget() => Err(e),
        Err(e) => Ok(Err(e.to_string())),
    }
}

/// Applies `strategy` to `program`: one request, a render check, one retry,
/// then fallback to the original program with a flag.
pub fn diversify(
    program: &PlotProgram,
    strategy: Strategy,
    layout: Layout,
    gateway: &Gateway,
    render_check: &RenderCheck<'_>,
) -> Result<DiversifyOutcome, DiversifyError> {
    if strategy == Strategy::OverallTitle && layout.is_single() {
        log::debug!("{}: overall_title applies to multi-subplot figures only", program.figure_id);
    }
    let request = diversify_request(program, strategy, layout);
    let before_digest = program.digest();
    let mut attempts = 0;
    for _ in 0..2 {
        attempts += 1;
        let source = match candidate(gateway, &request)? {
            Ok(s) => s,
            Err(why) => {
                log::warn!("{}: diversify attempt {attempts} unusable: {why}", program.figure_id);
                continue;
            }
        };
        if !data_preserved(&program.source, &source) {
            log::warn!("{}: diversify attempt {attempts} altered the data block", program.figure_id);
            continue;
        }
        let mutated = program.with_source(source, Some(strategy.as_str()));
        match render_check(&mutated) {
            Ok(artifact) => {
                let record = DiversificationRecord {
                    figure_id: program.figure_id.clone(),
                    strategy,
                    before_digest,
                    after_digest: mutated.digest(),
                    data_preserved: true,
                    attempts,
                    flags: Vec::new(),
                };
                return Ok(DiversifyOutcome { program: mutated, record, artifact: Some(artifact) });
            }
            Err(e) => log::warn!("{}: diversified program failed to render: {}", program.figure_id, e.code()),
        }
    }
    let record = DiversificationRecord {
        figure_id: program.figure_id.clone(),
        strategy,
        before_digest: before_digest.clone(),
        after_digest: before_digest,
        data_preserved: true,
        attempts,
        flags: vec![FLAG_DIVERSIFY_FALLBACK.to_string()],
    };
    Ok(DiversifyOutcome { program: program.clone(), record, artifact: None })
}

/// The literal passed to the last `fig.suptitle(...)` call, if any.
pub fn suptitle_literal(source: &str) -> Option<String> {
    let at = source.rfind("fig.suptitle(")?;
    let rest = source[at + "fig.suptitle(".len()..].trim_start();
    let rest = rest.strip_prefix("tx(").unwrap_or(rest);
    let mut de = serde_json::Deserializer::from_str(rest).into_iter::<String>();
    de.next()?.ok()
}

// ---------------------------------------------------------------------------
// Geometry post-processing

/// Pixel size a geometry renders at.
pub fn pixel_size(figsize: (f64, f64), dpi: u32) -> (u32, u32) {
    ((figsize.0 * dpi as f64).round() as u32, (figsize.1 * dpi as f64).round() as u32)
}

pub fn in_envelope(width: u32, height: u32) -> bool {
    let aspect = width as f64 / height.max(1) as f64;
    (WIDTH_RANGE.0..=WIDTH_RANGE.1).contains(&width) && aspect >= ASPECT_RANGE.0 && aspect <= ASPECT_RANGE.1
}

/// Moves a geometry into the envelope: aspect first (by growing the short
/// side), then width (by changing dpi, resizing the figure only when dpi would
/// leave [50, 300]). Geometries already inside are returned unchanged.
pub fn fix_geometry(figsize: (f64, f64), dpi: u32) -> ((f64, f64), u32) {
    let (w, h) = pixel_size(figsize, dpi);
    if in_envelope(w, h) {
        return (figsize, dpi);
    }
    let (mut fw, mut fh) = figsize;
    let aspect = fw / fh;
    if aspect > ASPECT_RANGE.1 {
        fh = fw / (ASPECT_RANGE.1 - 0.05);
    } else if aspect < ASPECT_RANGE.0 {
        fw = fh * (ASPECT_RANGE.0 + 0.05);
    }
    let target = (fw * dpi as f64).clamp(WIDTH_RANGE.0 as f64 + 10.0, WIDTH_RANGE.1 as f64 - 10.0);
    let mut new_dpi = (target / fw).round();
    if !(50.0..=300.0).contains(&new_dpi) {
        new_dpi = new_dpi.clamp(50.0, 300.0);
        let s = target / (fw * new_dpi);
        fw *= s;
        fh *= s;
    }
    fw = (fw * 100.0).round() / 100.0;
    fh = (fh * 100.0).round() / 100.0;
    let mut new_dpi = new_dpi as u32;
    // Rounding the inches can push the width a pixel or two out; nudge dpi back.
    while pixel_size((fw, fh), new_dpi).0 > WIDTH_RANGE.1 {
        new_dpi -= 1;
    }
    while pixel_size((fw, fh), new_dpi).0 < WIDTH_RANGE.0 {
        new_dpi += 1;
    }
    ((fw, fh), new_dpi)
}

/// Stub post-processing: the analytic fix applied to the program text.
pub fn analytic_geometry_fix(source: &str) -> String {
    match read_geometry(source) {
        Some((figsize, dpi)) => {
            let (fs, d) = fix_geometry(figsize, dpi);
            if (fs, d) == (figsize, dpi) {
                source.to_string()
            } else {
                set_geometry(source, fs, d)
            }
        }
        None => source.to_string(),
    }
}

pub fn postprocess_request(program: &PlotProgram, width: u32, height: u32) -> PromptRequest {
    PromptRequest::new(TemplateId::FigsizePostprocess)
        .slot("width_px", width.to_string())
        .slot("height_px", height.to_string())
        .slot(
            "target",
            format!(
                "width between {} and {} pixels, and width / height between {} and {}",
                WIDTH_RANGE.0, WIDTH_RANGE.1, ASPECT_RANGE.0, ASPECT_RANGE.1
            ),
        )
        .slot("program", program.source.as_str())
}

#[derive(Debug, Clone)]
pub struct PostprocessOutcome {
    pub program: PlotProgram,
    pub changed: bool,
    pub before_px: (u32, u32),
    pub after_px: (u32, u32),
    pub artifact: Option<ImageArtifact>,
    pub flags: Vec<String>,
}

/// True when `after` differs from `before` only on the geometry lines.
fn only_geometry_changed(before: &str, after: &str) -> bool {
    let strip = |s: &str| -> Vec<String> {
        s.lines()
            .filter(|l| !l.trim_start().starts_with("FIGSIZE = ") && !l.trim_start().starts_with("DPI = "))
            .map(|l| l.trim_end().to_string())
            .collect()
    };
    strip(before) == strip(after)
}

/// Brings an out-of-envelope figure's geometry inside the envelope. Figures
/// already inside are left alone without any request.
pub fn postprocess_geometry(
    program: &PlotProgram,
    gateway: &Gateway,
    render_check: &RenderCheck<'_>,
) -> Result<PostprocessOutcome, DiversifyError> {
    let Some((figsize, dpi)) = read_geometry(&program.source) else {
        return Ok(PostprocessOutcome {
            program: program.clone(),
            changed: false,
            before_px: (0, 0),
            after_px: (0, 0),
            artifact: None,
            flags: vec![FLAG_POSTPROCESS_FALLBACK.into()],
        });
    };
    let before_px = pixel_size(figsize, dpi);
    let unchanged = |flags: Vec<String>| PostprocessOutcome {
        program: program.clone(),
        changed: false,
        before_px,
        after_px: before_px,
        artifact: None,
        flags,
    };
    if in_envelope(before_px.0, before_px.1) {
        return Ok(unchanged(Vec::new()));
    }
    let request = postprocess_request(program, before_px.0, before_px.1);
    for attempt in 1..=2 {
        let source = match candidate(gateway, &request)? {
            Ok(s) => s,
            Err(why) => {
                log::warn!("{}: postprocess attempt {attempt} unusable: {why}", program.figure_id);
                continue;
            }
        };
        let Some((fs, d)) = read_geometry(&source) else { continue };
        let px = pixel_size(fs, d);
        if !only_geometry_changed(&program.source, &source) || !in_envelope(px.0, px.1) {
            log::warn!("{}: postprocess attempt {attempt} rejected ({}x{})", program.figure_id, px.0, px.1);
            continue;
        }
        let adjusted = program.with_source(source, None);
        match render_check(&adjusted) {
            Ok(artifact) => {
                return Ok(PostprocessOutcome {
                    program: adjusted,
                    changed: true,
                    before_px,
                    after_px: (artifact.width_px, artifact.height_px),
                    artifact: Some(artifact),
                    flags: Vec::new(),
                })
            }
            Err(e) => log::warn!("{}: post-processed program failed to render: {}", program.figure_id, e.code()),
        }
    }
    Ok(unchanged(vec![FLAG_POSTPROCESS_FALLBACK.into()]))
}

#[cfg(test)]
mod tests {
    use super::Strategy;
    use super::*;
    use proptest::prelude::{prop_assert, proptest};

    #[test]
    fn strategy_sets() {
        assert_eq!(Strategy::SINGLE.len(), 5);
        assert_eq!(Strategy::MULTI.len(), 6);
        assert!(!Strategy::SINGLE.contains(&Strategy::OverallTitle));
        for s in Strategy::MULTI {
            assert_eq!(Strategy::from_instruction(s.instruction()), Some(s));
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_roughly_uniform() {
        assert_eq!(sample_strategy(5, FigureKind::Single), sample_strategy(5, FigureKind::Single));
        let mut counts = [0usize; 5];
        for seed in 0..5000u64 {
            let s = sample_strategy(seed, FigureKind::Single);
            counts[Strategy::SINGLE.iter().position(|x| *x == s).unwrap()] += 1;
        }
        // 3 sigma around 1000 with p = 0.2: sqrt(5000 * 0.2 * 0.8) = 28.3
        for c in counts {
            assert!((c as f64 - 1000.0).abs() <= 3.0 * 28.3, "{counts:?}");
        }
        assert!((0..200u64).any(|s| sample_strategy(s, FigureKind::Multi) == Strategy::OverallTitle));
    }

    #[test]
    fn wide_figure_is_brought_inside() {
        // 4000 x 800 px
        let (fs, d) = fix_geometry((40.0, 8.0), 100);
        let (w, h) = pixel_size(fs, d);
        assert!(in_envelope(w, h), "{w}x{h}");
    }

    #[test]
    fn tall_figure_aspect_is_corrected() {
        let (fs, d) = fix_geometry((4.0, 12.0), 100);
        let (w, h) = pixel_size(fs, d);
        assert!(w as f64 / h as f64 >= ASPECT_RANGE.0, "{w}x{h}");
        assert!(in_envelope(w, h));
    }

    #[test]
    fn inside_is_fixed_point() {
        assert_eq!(fix_geometry((10.0, 6.0), 100), ((10.0, 6.0), 100));
        let src = "FIGSIZE = (10.0, 6.0)\nDPI = 100\n";
        assert_eq!(analytic_geometry_fix(src), src);
    }

    #[test]
    fn suptitle_extraction() {
        assert_eq!(suptitle_literal("fig.suptitle(\"A \\\"B\\\"\", fontweight=\"bold\")").as_deref(), Some("A \"B\""));
        assert_eq!(suptitle_literal("fig.suptitle(tx(\"X\"), fontsize=\"x-large\")").as_deref(), Some("X"));
        assert_eq!(suptitle_literal("nothing"), None);
    }

    proptest! {
        #[test]
        fn fix_always_lands_inside(fw in 1.0f64..60.0, fh in 1.0f64..60.0, dpi in 30u32..400) {
            let (fs, d) = fix_geometry((fw, fh), dpi);
            let (w, h) = pixel_size(fs, d);
            prop_assert!(in_envelope(w, h), "({fw}, {fh}) @ {dpi} -> {fs:?} @ {d} = {w}x{h}");
        }
    }
}
