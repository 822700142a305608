use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ChartType, Layout, Theme};

/// One x coordinate: a number or a category label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum XValue {
    Num(f64),
    Cat(String),
}

impl XValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            XValue::Num(v) => Some(*v),
            XValue::Cat(_) => None,
        }
    }
}

impl fmt::Display for XValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XValue::Num(v) => write!(f, "{}", crate::util::fmt_num(*v)),
            XValue::Cat(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SeriesRole {
    #[default]
    Base,
    Overlay,
}

impl SeriesRole {
    fn is_base(&self) -> bool {
        *self == SeriesRole::Base
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSeries {
    pub label: String,
    pub x: Vec<XValue>,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub aux: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "SeriesRole::is_base")]
    pub role: SeriesRole,
}

impl DataSeries {
    pub fn new(label: impl Into<String>, x: Vec<XValue>, y: Vec<f64>) -> Self {
        Self { label: label.into(), x, y, aux: BTreeMap::new(), role: SeriesRole::Base }
    }

    pub fn with_aux(mut self, name: &str, values: Vec<f64>) -> Self {
        self.aux.insert(name.to_string(), values);
        self
    }

    pub fn with_role(mut self, role: SeriesRole) -> Self {
        self.role = role;
        self
    }

    /// Every number this series carries, in a stable order.
    pub fn numeric_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.x
            .iter()
            .filter_map(XValue::as_f64)
            .chain(self.y.iter().copied())
            .chain(self.aux.values().flatten().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Increasing,
    Decreasing,
    Stable,
}

impl Trend {
    pub const ALL: [Trend; 3] = [Trend::Increasing, Trend::Decreasing, Trend::Stable];

    pub fn as_str(self) -> &'static str {
        match self {
            Trend::Increasing => "increasing",
            Trend::Decreasing => "decreasing",
            Trend::Stable => "stable",
        }
    }
}

impl fmt::Display for Trend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Styling parameters. The field set is the closed style vocabulary; unknown
/// keys are rejected at parse time.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Style {
    /// Hex colors (`#rrggbb`), cycled over series.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub colors: Vec<String>,
    /// Marker codes, cycled over series.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub markers: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub line_styles: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub legend_loc: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colormap: Option<String>,
}

pub const MARKERS: &[&str] = &["o", "s", "^", "v", "D", "x", "+", "*", "p", "h", "."];
pub const LINE_STYLES: &[&str] = &["-", "--", "-.", ":"];
pub const LEGEND_LOCATIONS: &[&str] = &[
    "best",
    "upper right",
    "upper left",
    "lower left",
    "lower right",
    "right",
    "center left",
    "center right",
    "lower center",
    "upper center",
    "center",
];
pub const COLORMAPS: &[&str] = &[
    "viridis", "plasma", "inferno", "magma", "cividis", "coolwarm", "Blues", "Greens", "Oranges", "Purples", "YlGnBu",
    "RdYlBu", "Spectral",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationKind {
    Text,
    Arrow,
    Hline,
    Vline,
    Highlight,
}

/// An annotation anchored in data coordinates. For categorical axes `x` is the
/// category position (0-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub kind: AnnotationKind,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub chart_type: ChartType,
    pub theme: Theme,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<DataSeries>,
    #[serde(default)]
    pub style: Style,
    pub trend_hint: Trend,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<Annotation>,
}

impl ChartSpec {
    pub fn base_series(&self) -> impl Iterator<Item = &DataSeries> {
        self.series.iter().filter(|s| s.role == SeriesRole::Base)
    }

    pub fn overlay_series(&self) -> impl Iterator<Item = &DataSeries> {
        self.series.iter().filter(|s| s.role == SeriesRole::Overlay)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subplot {
    pub cell: usize,
    pub spec: ChartSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureSpec {
    pub figure_id: String,
    pub layout: Layout,
    pub subplots: Vec<Subplot>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overall_title: Option<String>,
    /// (width, height) in inches.
    pub figsize: (f64, f64),
    pub dpi: u32,
}

impl FigureSpec {
    pub fn single(figure_id: impl Into<String>, spec: ChartSpec, figsize: (f64, f64), dpi: u32) -> Self {
        Self {
            figure_id: figure_id.into(),
            layout: Layout::SINGLE,
            subplots: vec![Subplot { cell: 0, spec }],
            overall_title: None,
            figsize,
            dpi,
        }
    }

    /// The theme shared by the subplots (first subplot's theme).
    pub fn theme(&self) -> Option<Theme> {
        self.subplots.first().map(|s| s.spec.theme)
    }

    pub fn cell_types(&self) -> Vec<ChartType> {
        let mut cells: Vec<&Subplot> = self.subplots.iter().collect();
        cells.sort_by_key(|s| s.cell);
        cells.into_iter().map(|s| s.spec.chart_type).collect()
    }

    pub fn pixel_size(&self) -> (u32, u32) {
        ((self.figsize.0 * self.dpi as f64).round() as u32, (self.figsize.1 * self.dpi as f64).round() as u32)
    }

    /// All visible text: overall title, subplot titles and axis labels.
    pub fn text_elements(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(t) = &self.overall_title {
            out.push(t.clone());
        }
        for sp in &self.subplots {
            out.push(sp.spec.title.clone());
            out.push(sp.spec.x_label.clone());
            out.push(sp.spec.y_label.clone());
        }
        out
    }
}

/// One single-plot generation job.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GenerationTask {
    pub theme: Theme,
    pub chart_type: ChartType,
    pub trend: Trend,
    pub element_count: usize,
    pub seed: u64,
}

impl GenerationTask {
    pub fn is_valid(&self) -> bool {
        self.element_count >= 1 && self.chart_type.bounds().contains(self.element_count)
    }
}
