use std::collections::HashSet;
use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::LazyLock;

use super::spec::{COLORMAPS, LEGEND_LOCATIONS, LINE_STYLES, MARKERS};
use super::{ChartSpec, ChartType, DataSeries, DataShape, FigureSpec, SeriesRole, Style, XValue};

/// Stable violation codes. The string form is part of the report format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    InvalidLayout,
    SubplotCountMismatch,
    CellIndexOutOfRange,
    DuplicateCell,
    InvalidFigsize,
    InvalidDpi,
    EmptyTitle,
    EmptySeries,
    SeriesCountOutOfBounds,
    MissingOverlaySeries,
    UnexpectedOverlaySeries,
    SeriesLengthMismatch,
    AuxLengthMismatch,
    MissingAux,
    CandlestickOrder,
    MixedXKinds,
    NumericXRequired,
    XNotIncreasing,
    XNotShared,
    DuplicateCategory,
    NonFiniteValue,
    NonPositiveValue,
    NegativeError,
    InvalidNodeTarget,
    TooFewValues,
    InvalidStyleValue,
    InvalidAnnotation,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        use ViolationCode::*;
        match self {
            InvalidLayout => "INVALID_LAYOUT",
            SubplotCountMismatch => "SUBPLOT_COUNT_MISMATCH",
            CellIndexOutOfRange => "CELL_INDEX_OUT_OF_RANGE",
            DuplicateCell => "DUPLICATE_CELL",
            InvalidFigsize => "INVALID_FIGSIZE",
            InvalidDpi => "INVALID_DPI",
            EmptyTitle => "EMPTY_TITLE",
            EmptySeries => "EMPTY_SERIES",
            SeriesCountOutOfBounds => "SERIES_COUNT_OUT_OF_BOUNDS",
            MissingOverlaySeries => "MISSING_OVERLAY_SERIES",
            UnexpectedOverlaySeries => "UNEXPECTED_OVERLAY_SERIES",
            SeriesLengthMismatch => "SERIES_LENGTH_MISMATCH",
            AuxLengthMismatch => "AUX_LENGTH_MISMATCH",
            MissingAux => "MISSING_AUX",
            CandlestickOrder => "CANDLESTICK_ORDER",
            MixedXKinds => "MIXED_X_KINDS",
            NumericXRequired => "NUMERIC_X_REQUIRED",
            XNotIncreasing => "X_NOT_INCREASING",
            XNotShared => "X_NOT_SHARED",
            DuplicateCategory => "DUPLICATE_CATEGORY",
            NonFiniteValue => "NON_FINITE_VALUE",
            NonPositiveValue => "NON_POSITIVE_VALUE",
            NegativeError => "NEGATIVE_ERROR",
            InvalidNodeTarget => "INVALID_NODE_TARGET",
            TooFewValues => "TOO_FEW_VALUES",
            InvalidStyleValue => "INVALID_STYLE_VALUE",
            InvalidAnnotation => "INVALID_ANNOTATION",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    /// Location inside the spec, e.g. `subplots[1].series[0]`.
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    pub fn codes(&self) -> Vec<ViolationCode> {
        self.violations.iter().map(|v| v.code).collect()
    }

    fn push(&mut self, code: ViolationCode, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation { code, path: path.into(), message: message.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{} at {}: {}", v.code, v.path, v.message)?;
        }
        Ok(())
    }
}

static HEX_COLOR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^#[0-9a-fA-F]{6}$").unwrap());

/// Checks every structural invariant of a figure. Violations are returned as
/// data; an empty report means the spec is valid.
pub fn validate_figure_spec(spec: &FigureSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let layout = spec.layout;
    if !layout.is_valid() {
        report.push(ViolationCode::InvalidLayout, "layout", format!("{layout} is not a valid grid"));
    }
    let cells = layout.rows as usize * layout.cols as usize;
    if spec.subplots.len() != cells {
        report.push(
            ViolationCode::SubplotCountMismatch,
            "subplots",
            format!("layout {layout} has {cells} cells but {} subplots were given", spec.subplots.len()),
        );
    }
    let mut seen = HashSet::new();
    for (i, sp) in spec.subplots.iter().enumerate() {
        if sp.cell >= cells {
            report.push(
                ViolationCode::CellIndexOutOfRange,
                format!("subplots[{i}].cell"),
                format!("cell {} outside 0..{cells}", sp.cell),
            );
        }
        if !seen.insert(sp.cell) {
            report.push(
                ViolationCode::DuplicateCell,
                format!("subplots[{i}].cell"),
                format!("cell {} repeated", sp.cell),
            );
        }
        validate_chart_into(&sp.spec, &format!("subplots[{i}]"), &mut report);
    }
    let (w, h) = spec.figsize;
    if !(w.is_finite() && h.is_finite() && w > 0.0 && h > 0.0) {
        report.push(ViolationCode::InvalidFigsize, "figsize", format!("({w}, {h}) must be positive"));
    }
    if spec.dpi == 0 {
        report.push(ViolationCode::InvalidDpi, "dpi", "dpi must be positive");
    }
    report
}

/// Validates one chart on its own.
pub fn validate_chart_spec(spec: &ChartSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    validate_chart_into(spec, "chart", &mut report);
    report
}

fn validate_chart_into(spec: &ChartSpec, at: &str, report: &mut ValidationReport) {
    let ty = spec.chart_type;
    if spec.title.trim().is_empty() {
        report.push(ViolationCode::EmptyTitle, format!("{at}.title"), "title must be non-empty");
    }
    if spec.series.is_empty() {
        report.push(ViolationCode::EmptySeries, format!("{at}.series"), "at least one series is required");
        return;
    }

    let base: Vec<(usize, &DataSeries)> =
        spec.series.iter().enumerate().filter(|(_, s)| s.role == SeriesRole::Base).collect();
    let overlay_count = spec.series.len() - base.len();
    let bounds = ty.bounds();
    if base.len() < bounds.series_min || base.len() > bounds.series_max {
        report.push(
            ViolationCode::SeriesCountOutOfBounds,
            format!("{at}.series"),
            format!("{ty} takes {}..={} base series, got {}", bounds.series_min, bounds.series_max, base.len()),
        );
    }
    if ty.is_overlay() && overlay_count == 0 {
        report.push(
            ViolationCode::MissingOverlaySeries,
            format!("{at}.series"),
            format!("{ty} needs an overlay series"),
        );
    }
    if !ty.is_overlay() && overlay_count > 0 {
        report.push(
            ViolationCode::UnexpectedOverlaySeries,
            format!("{at}.series"),
            format!("{ty} is not an overlay chart"),
        );
    }

    for (j, s) in spec.series.iter().enumerate() {
        validate_series(ty, s, &format!("{at}.series[{j}]"), report);
    }

    // Series drawn against one shared axis must agree on x.
    let shares_x = matches!(
        ty,
        ChartType::Bar
            | ChartType::Area
            | ChartType::Heatmap
            | ChartType::Radar
            | ChartType::ThreeD
            | ChartType::ErrorBar
            | ChartType::Contour
            | ChartType::BarLine
    );
    if shares_x {
        let first = &spec.series[0].x;
        for (j, s) in spec.series.iter().enumerate().skip(1) {
            if &s.x != first {
                report.push(ViolationCode::XNotShared, format!("{at}.series[{j}].x"), "x must match the first series");
            }
        }
    }
    if ty == ChartType::Node {
        for (j, s) in &base {
            if let Some(targets) = s.aux.get("target") {
                let n = s.x.len() as f64;
                if targets.iter().any(|t| t.fract() != 0.0 || *t < 0.0 || *t >= n) {
                    report.push(
                        ViolationCode::InvalidNodeTarget,
                        format!("{at}.series[{j}].aux.target"),
                        "targets must be node indices",
                    );
                }
            }
        }
    }

    validate_style(&spec.style, &format!("{at}.style"), report);
    for (k, a) in spec.annotations.iter().enumerate() {
        if !(a.x.is_finite() && a.y.is_finite()) {
            report.push(
                ViolationCode::InvalidAnnotation,
                format!("{at}.annotations[{k}]"),
                "annotation anchor must be finite",
            );
        }
    }
}

fn validate_series(ty: ChartType, s: &DataSeries, at: &str, report: &mut ValidationReport) {
    if s.y.len() != s.x.len() {
        report.push(
            ViolationCode::SeriesLengthMismatch,
            at.to_string(),
            format!("len(x) = {} but len(y) = {}", s.x.len(), s.y.len()),
        );
    }
    if s.y.is_empty() {
        report.push(ViolationCode::TooFewValues, format!("{at}.y"), "series has no values");
    }
    for (name, values) in &s.aux {
        if values.len() != s.x.len() {
            report.push(
                ViolationCode::AuxLengthMismatch,
                format!("{at}.aux.{name}"),
                format!("len = {} but len(x) = {}", values.len(), s.x.len()),
            );
        }
    }
    if s.numeric_values().any(|v| !v.is_finite()) {
        report.push(ViolationCode::NonFiniteValue, at.to_string(), "all values must be finite");
    }

    let numeric = s.x.iter().filter(|x| matches!(x, XValue::Num(_))).count();
    if numeric != 0 && numeric != s.x.len() {
        report.push(ViolationCode::MixedXKinds, format!("{at}.x"), "x mixes numbers and category labels");
    }
    let all_numeric = numeric == s.x.len();

    let is_base = s.role == SeriesRole::Base;
    match ty.shape() {
        DataShape::Sequence => check_x_order(s, all_numeric, at, report),
        DataShape::Categorical => {
            if !all_numeric {
                check_unique_categories(s, at, report);
            }
        }
        DataShape::Points => {
            if is_base && !all_numeric {
                report.push(ViolationCode::NumericXRequired, format!("{at}.x"), format!("{ty} needs numeric x"));
            }
        }
        DataShape::Samples => {
            if s.y.len() < 2 {
                report.push(ViolationCode::TooFewValues, format!("{at}.y"), "distributions need at least 2 samples");
            }
        }
        DataShape::Grid => {
            if ty == ChartType::Contour {
                if !all_numeric {
                    report.push(ViolationCode::NumericXRequired, format!("{at}.x"), "contour needs numeric x");
                } else {
                    check_x_order(s, true, at, report);
                }
            } else if !all_numeric {
                check_unique_categories(s, at, report);
            }
        }
    }
    if is_base {
        for name in ty.required_aux() {
            if !s.aux.contains_key(*name) {
                report.push(
                    ViolationCode::MissingAux,
                    format!("{at}.aux"),
                    format!("{ty} requires aux channel {name:?}"),
                );
            }
        }
        if let Some(err) = s.aux.get("err") {
            if err.iter().any(|e| *e < 0.0) {
                report.push(ViolationCode::NegativeError, format!("{at}.aux.err"), "error magnitudes must be >= 0");
            }
        }
        if ty == ChartType::Bubble {
            if let Some(size) = s.aux.get("size") {
                if size.iter().any(|v| *v <= 0.0) {
                    report.push(ViolationCode::NonPositiveValue, format!("{at}.aux.size"), "bubble sizes must be > 0");
                }
            }
        }
        if ty == ChartType::Candlestick {
            check_candles(s, at, report);
        }
    }
    if ty.requires_positive_values() && s.y.iter().any(|v| *v <= 0.0) {
        report.push(ViolationCode::NonPositiveValue, format!("{at}.y"), format!("{ty} values must be > 0"));
    }
    if matches!(ty, ChartType::Area | ChartType::Radar) && s.y.iter().any(|v| *v < 0.0) {
        report.push(ViolationCode::NonPositiveValue, format!("{at}.y"), format!("{ty} values must be >= 0"));
    }
}

fn check_x_order(s: &DataSeries, all_numeric: bool, at: &str, report: &mut ValidationReport) {
    if all_numeric {
        let xs: Vec<f64> = s.x.iter().filter_map(XValue::as_f64).collect();
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            report.push(ViolationCode::XNotIncreasing, format!("{at}.x"), "numeric x must be strictly increasing");
        }
    } else {
        check_unique_categories(s, at, report);
    }
}

fn check_unique_categories(s: &DataSeries, at: &str, report: &mut ValidationReport) {
    let mut seen = HashSet::new();
    for x in &s.x {
        if let XValue::Cat(c) = x {
            if !seen.insert(c.as_str()) {
                report.push(ViolationCode::DuplicateCategory, format!("{at}.x"), format!("category {c:?} repeated"));
                return;
            }
        }
    }
}

fn check_candles(s: &DataSeries, at: &str, report: &mut ValidationReport) {
    let (Some(open), Some(high), Some(low), Some(close)) =
        (s.aux.get("open"), s.aux.get("high"), s.aux.get("low"), s.aux.get("close"))
    else {
        return;
    };
    let n = open.len().min(high.len()).min(low.len()).min(close.len());
    for i in 0..n {
        let lo_body = open[i].min(close[i]);
        let hi_body = open[i].max(close[i]);
        if !(low[i] <= lo_body && hi_body <= high[i]) {
            report.push(
                ViolationCode::CandlestickOrder,
                format!("{at}.aux[{i}]"),
                "need low <= min(open, close) <= max(open, close) <= high",
            );
            return;
        }
    }
}

fn validate_style(style: &Style, at: &str, report: &mut ValidationReport) {
    let mut bad = |what: String| report.push(ViolationCode::InvalidStyleValue, at.to_string(), what);
    for c in &style.colors {
        if !HEX_COLOR.is_match(c) {
            bad(format!("color {c:?} is not #rrggbb"));
        }
    }
    for m in &style.markers {
        if !MARKERS.contains(&m.as_str()) {
            bad(format!("unknown marker {m:?}"));
        }
    }
    for l in &style.line_styles {
        if !LINE_STYLES.contains(&l.as_str()) {
            bad(format!("unknown line style {l:?}"));
        }
    }
    if let Some(loc) = &style.legend_loc {
        if !LEGEND_LOCATIONS.contains(&loc.as_str()) {
            bad(format!("unknown legend location {loc:?}"));
        }
    }
    if let Some(a) = style.alpha {
        if !(0.0..=1.0).contains(&a) {
            bad(format!("alpha {a} outside [0, 1]"));
        }
    }
    if let Some(w) = style.line_width {
        if !(w > 0.0 && w <= 10.0) {
            bad(format!("line width {w} outside (0, 10]"));
        }
    }
    if let Some(cm) = &style.colormap {
        if !COLORMAPS.contains(&cm.as_str()) {
            bad(format!("unknown colormap {cm:?}"));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Annotation, AnnotationKind, Layout, Subplot, Theme, Trend};

    fn line_chart(n: usize) -> ChartSpec {
        ChartSpec {
            chart_type: ChartType::Line,
            theme: Theme::Physics,
            title: "Particle Velocity".into(),
            x_label: "Time (s)".into(),
            y_label: "Velocity (m/s)".into(),
            series: vec![DataSeries::new(
                "Proton",
                (0..n).map(|i| XValue::Num(i as f64)).collect(),
                (0..n).map(|i| 1.0 + i as f64).collect(),
            )],
            style: Style::default(),
            trend_hint: Trend::Increasing,
            annotations: vec![],
        }
    }

    fn single(spec: ChartSpec) -> FigureSpec {
        FigureSpec::single("fig", spec, (8.0, 6.0), 100)
    }

    #[test]
    fn valid_single_line_figure_has_empty_report() {
        let fig = single(line_chart(8));
        let report = validate_figure_spec(&fig);
        assert!(report.is_empty(), "{report}");
    }

    #[test]
    fn subplot_count_mismatch() {
        let mut fig = single(line_chart(8));
        fig.layout = Layout { rows: 1, cols: 2 };
        assert_eq!(validate_figure_spec(&fig).codes(), vec![ViolationCode::SubplotCountMismatch]);
    }

    #[test]
    fn series_length_mismatch() {
        let mut spec = line_chart(5);
        spec.series[0].y.pop();
        let report = validate_figure_spec(&single(spec));
        assert!(report.has(ViolationCode::SeriesLengthMismatch), "{report}");
    }

    #[test]
    fn duplicate_and_out_of_range_cells() {
        let mut fig = single(line_chart(5));
        fig.layout = Layout { rows: 1, cols: 2 };
        fig.subplots.push(Subplot { cell: 0, spec: line_chart(5) });
        let r = validate_figure_spec(&fig);
        assert!(r.has(ViolationCode::DuplicateCell));
        fig.subplots[1].cell = 7;
        assert!(validate_figure_spec(&fig).has(ViolationCode::CellIndexOutOfRange));
    }

    #[test]
    fn candlestick_ordering_is_checked() {
        let mut spec = line_chart(3);
        spec.chart_type = ChartType::Candlestick;
        spec.series[0] = spec.series[0]
            .clone()
            .with_aux("open", vec![1.0, 2.0, 3.0])
            .with_aux("close", vec![2.0, 3.0, 4.0])
            .with_aux("high", vec![2.5, 3.5, 4.5])
            .with_aux("low", vec![0.5, 1.5, 3.5]);
        let r = validate_chart_spec(&spec);
        assert!(r.has(ViolationCode::CandlestickOrder), "{r}");
        spec.series[0].aux.insert("low".into(), vec![0.5, 1.5, 2.5]);
        assert!(validate_chart_spec(&spec).is_empty(), "{}", validate_chart_spec(&spec));
    }

    #[test]
    fn x_must_increase_for_line_charts() {
        let mut spec = line_chart(4);
        spec.series[0].x.swap(1, 2);
        assert!(validate_chart_spec(&spec).has(ViolationCode::XNotIncreasing));
    }

    #[test]
    fn overlay_structure() {
        let mut spec = line_chart(4);
        spec.chart_type = ChartType::BarLine;
        assert!(validate_chart_spec(&spec).has(ViolationCode::MissingOverlaySeries));
        spec.chart_type = ChartType::Line;
        spec.series.push(spec.series[0].clone().with_role(SeriesRole::Overlay));
        assert!(validate_chart_spec(&spec).has(ViolationCode::UnexpectedOverlaySeries));
    }

    #[test]
    fn style_values_are_checked() {
        let mut spec = line_chart(4);
        spec.style.colors = vec!["#12ab3f".into(), "blue".into()];
        spec.style.alpha = Some(1.5);
        let r = validate_chart_spec(&spec);
        assert_eq!(r.violations.iter().filter(|v| v.code == ViolationCode::InvalidStyleValue).count(), 2);
    }

    #[test]
    fn unknown_style_keys_fail_to_parse() {
        let err = serde_json::from_str::<Style>(r#"{"colors": [], "sparkle": true}"#);
        assert!(err.is_err());
    }

    #[test]
    fn annotations_must_be_finite() {
        let mut spec = line_chart(4);
        spec.annotations.push(Annotation { kind: AnnotationKind::Text, x: f64::NAN, y: 1.0, text: "x".into() });
        assert!(validate_chart_spec(&spec).has(ViolationCode::InvalidAnnotation));
    }

    #[test]
    fn validation_is_pure() {
        let mut spec = line_chart(4);
        spec.series[0].y.push(1.0);
        let fig = single(spec);
        assert_eq!(validate_figure_spec(&fig), validate_figure_spec(&fig));
    }
}
