use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ParseError;

/// The closed set of supported chart kinds: 22 base types plus 7 two-layer overlays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChartType {
    #[serde(rename = "line")]
    Line,
    #[serde(rename = "bar")]
    Bar,
    #[serde(rename = "pie")]
    Pie,
    #[serde(rename = "area")]
    Area,
    #[serde(rename = "errorpoint")]
    ErrorPoint,
    #[serde(rename = "treemap")]
    Treemap,
    #[serde(rename = "funnel")]
    Funnel,
    #[serde(rename = "node")]
    Node,
    #[serde(rename = "density")]
    Density,
    #[serde(rename = "histogram")]
    Histogram,
    #[serde(rename = "box")]
    Box,
    #[serde(rename = "bubble")]
    Bubble,
    #[serde(rename = "candlestick")]
    Candlestick,
    #[serde(rename = "heatmap")]
    Heatmap,
    #[serde(rename = "radar")]
    Radar,
    #[serde(rename = "rose")]
    Rose,
    #[serde(rename = "3d")]
    ThreeD,
    #[serde(rename = "errorbar")]
    ErrorBar,
    #[serde(rename = "quiver")]
    Quiver,
    #[serde(rename = "scatter")]
    Scatter,
    #[serde(rename = "violin")]
    Violin,
    #[serde(rename = "contour")]
    Contour,
    #[serde(rename = "bar+line")]
    BarLine,
    #[serde(rename = "pie+bar")]
    PieBar,
    #[serde(rename = "histogram+density")]
    HistogramDensity,
    #[serde(rename = "violin+box")]
    ViolinBox,
    #[serde(rename = "scatter+histogram")]
    ScatterHistogram,
    #[serde(rename = "scatter+density")]
    ScatterDensity,
    #[serde(rename = "hexbin+hist")]
    HexbinHist,
}

/// Element-count and series-count bounds for one chart type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElementBounds {
    /// What one "element" is for this type (points, slices, samples...).
    pub noun: &'static str,
    pub min: usize,
    pub max: usize,
    /// Number of base-role series.
    pub series_min: usize,
    pub series_max: usize,
}

impl ElementBounds {
    const fn new(noun: &'static str, min: usize, max: usize, series_min: usize, series_max: usize) -> Self {
        Self { noun, min, max, series_min, series_max }
    }

    pub fn contains(&self, count: usize) -> bool {
        (self.min..=self.max).contains(&count)
    }
}

/// How a chart type lays its values out, which decides the x-axis rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataShape {
    /// Ordered x with one y per x (line, area, ...). Numeric x must be strictly increasing.
    Sequence,
    /// Categorical x with one value per category.
    Categorical,
    /// Raw samples in y; x is the sample index.
    Samples,
    /// Free (x, y) point cloud.
    Points,
    /// One series per row of a rectangular grid.
    Grid,
}

impl ChartType {
    pub const ALL: [ChartType; 29] = [
        ChartType::Line,
        ChartType::Bar,
        ChartType::Pie,
        ChartType::Area,
        ChartType::ErrorPoint,
        ChartType::Treemap,
        ChartType::Funnel,
        ChartType::Node,
        ChartType::Density,
        ChartType::Histogram,
        ChartType::Box,
        ChartType::Bubble,
        ChartType::Candlestick,
        ChartType::Heatmap,
        ChartType::Radar,
        ChartType::Rose,
        ChartType::ThreeD,
        ChartType::ErrorBar,
        ChartType::Quiver,
        ChartType::Scatter,
        ChartType::Violin,
        ChartType::Contour,
        ChartType::BarLine,
        ChartType::PieBar,
        ChartType::HistogramDensity,
        ChartType::ViolinBox,
        ChartType::ScatterHistogram,
        ChartType::ScatterDensity,
        ChartType::HexbinHist,
    ];

    pub fn base_types() -> impl Iterator<Item = ChartType> {
        Self::ALL.into_iter().filter(|t| !t.is_overlay())
    }

    pub fn overlay_types() -> impl Iterator<Item = ChartType> {
        Self::ALL.into_iter().filter(|t| t.is_overlay())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ChartType::Line => "line",
            ChartType::Bar => "bar",
            ChartType::Pie => "pie",
            ChartType::Area => "area",
            ChartType::ErrorPoint => "errorpoint",
            ChartType::Treemap => "treemap",
            ChartType::Funnel => "funnel",
            ChartType::Node => "node",
            ChartType::Density => "density",
            ChartType::Histogram => "histogram",
            ChartType::Box => "box",
            ChartType::Bubble => "bubble",
            ChartType::Candlestick => "candlestick",
            ChartType::Heatmap => "heatmap",
            ChartType::Radar => "radar",
            ChartType::Rose => "rose",
            ChartType::ThreeD => "3d",
            ChartType::ErrorBar => "errorbar",
            ChartType::Quiver => "quiver",
            ChartType::Scatter => "scatter",
            ChartType::Violin => "violin",
            ChartType::Contour => "contour",
            ChartType::BarLine => "bar+line",
            ChartType::PieBar => "pie+bar",
            ChartType::HistogramDensity => "histogram+density",
            ChartType::ViolinBox => "violin+box",
            ChartType::ScatterHistogram => "scatter+histogram",
            ChartType::ScatterDensity => "scatter+density",
            ChartType::HexbinHist => "hexbin+hist",
        }
    }

    /// Human-readable name as used in prompts and QA answers.
    pub fn display_name(self) -> &'static str {
        match self {
            ChartType::Line => "line chart",
            ChartType::Bar => "bar chart",
            ChartType::Pie => "pie chart",
            ChartType::Area => "area chart",
            ChartType::ErrorPoint => "error point chart",
            ChartType::Treemap => "treemap",
            ChartType::Funnel => "funnel chart",
            ChartType::Node => "node-link graph",
            ChartType::Density => "density plot",
            ChartType::Histogram => "histogram",
            ChartType::Box => "box plot",
            ChartType::Bubble => "bubble chart",
            ChartType::Candlestick => "candlestick chart",
            ChartType::Heatmap => "heatmap",
            ChartType::Radar => "radar chart",
            ChartType::Rose => "rose chart",
            ChartType::ThreeD => "3D bar chart",
            ChartType::ErrorBar => "error bar chart",
            ChartType::Quiver => "quiver plot",
            ChartType::Scatter => "scatter plot",
            ChartType::Violin => "violin plot",
            ChartType::Contour => "contour plot",
            ChartType::BarLine => "bar and line overlay chart",
            ChartType::PieBar => "pie and bar overlay chart",
            ChartType::HistogramDensity => "histogram and density overlay chart",
            ChartType::ViolinBox => "violin and box overlay chart",
            ChartType::ScatterHistogram => "scatter and histogram overlay chart",
            ChartType::ScatterDensity => "scatter and density overlay chart",
            ChartType::HexbinHist => "hexbin and histogram overlay chart",
        }
    }

    pub fn is_overlay(self) -> bool {
        matches!(
            self,
            ChartType::BarLine
                | ChartType::PieBar
                | ChartType::HistogramDensity
                | ChartType::ViolinBox
                | ChartType::ScatterHistogram
                | ChartType::ScatterDensity
                | ChartType::HexbinHist
        )
    }

    pub fn shape(self) -> DataShape {
        use ChartType::*;
        match self {
            Line | Area | Candlestick => DataShape::Sequence,
            Bar | Pie | Treemap | Funnel | Node | Radar | Rose | ThreeD | ErrorBar | ErrorPoint | BarLine | PieBar => {
                DataShape::Categorical
            }
            Density | Histogram | Box | Violin | HistogramDensity | ViolinBox => DataShape::Samples,
            Bubble | Quiver | Scatter | ScatterHistogram | ScatterDensity | HexbinHist => DataShape::Points,
            Heatmap | Contour => DataShape::Grid,
        }
    }

    /// Whether the requested increasing/decreasing trend is imposed on the values.
    /// Sample- and grid-shaped charts carry distributions rather than a trend.
    pub fn carries_trend(self) -> bool {
        use ChartType::*;
        matches!(
            self,
            Line | Bar
                | Pie
                | Area
                | ErrorPoint
                | Treemap
                | Bubble
                | Candlestick
                | Radar
                | Rose
                | ThreeD
                | ErrorBar
                | Scatter
                | BarLine
        )
    }

    /// Axes projection the renderer needs for this type.
    pub fn projection(self) -> Option<&'static str> {
        match self {
            ChartType::Radar | ChartType::Rose => Some("polar"),
            ChartType::ThreeD => Some("3d"),
            _ => None,
        }
    }

    /// Aux channels every base series of this type must carry.
    pub fn required_aux(self) -> &'static [&'static str] {
        match self {
            ChartType::ErrorPoint | ChartType::ErrorBar => &["err"],
            ChartType::Bubble => &["size"],
            ChartType::Candlestick => &["open", "high", "low", "close"],
            ChartType::Quiver => &["u", "v"],
            ChartType::Node => &["target"],
            _ => &[],
        }
    }

    /// Values must be strictly positive (part-of-whole charts and bubble sizes).
    pub fn requires_positive_values(self) -> bool {
        matches!(
            self,
            ChartType::Pie
                | ChartType::Treemap
                | ChartType::Funnel
                | ChartType::Rose
                | ChartType::PieBar
                | ChartType::Node
        )
    }

    pub fn bounds(self) -> ElementBounds {
        use ChartType::*;
        match self {
            Line => ElementBounds::new("points", 5, 20, 1, 6),
            Bar => ElementBounds::new("categories", 3, 12, 1, 4),
            Pie => ElementBounds::new("slices", 3, 8, 1, 1),
            Area => ElementBounds::new("points", 5, 15, 2, 5),
            ErrorPoint => ElementBounds::new("points", 4, 12, 1, 3),
            Treemap => ElementBounds::new("tiles", 4, 10, 1, 1),
            Funnel => ElementBounds::new("stages", 3, 7, 1, 1),
            Node => ElementBounds::new("nodes", 4, 10, 1, 1),
            Density => ElementBounds::new("samples", 30, 120, 1, 3),
            Histogram => ElementBounds::new("samples", 40, 150, 1, 3),
            Box => ElementBounds::new("samples per group", 10, 40, 2, 6),
            Bubble => ElementBounds::new("points", 5, 20, 1, 3),
            Candlestick => ElementBounds::new("periods", 8, 25, 1, 1),
            Heatmap => ElementBounds::new("columns", 3, 12, 3, 12),
            Radar => ElementBounds::new("axes", 4, 8, 1, 3),
            Rose => ElementBounds::new("sectors", 4, 12, 1, 1),
            ThreeD => ElementBounds::new("categories", 3, 8, 2, 5),
            ErrorBar => ElementBounds::new("categories", 3, 10, 1, 3),
            Quiver => ElementBounds::new("vectors", 9, 36, 1, 1),
            Scatter => ElementBounds::new("points", 10, 60, 1, 4),
            Violin => ElementBounds::new("samples per group", 20, 80, 2, 5),
            Contour => ElementBounds::new("grid columns", 6, 15, 6, 15),
            BarLine => ElementBounds::new("categories", 3, 10, 1, 2),
            PieBar => ElementBounds::new("slices", 3, 6, 1, 1),
            HistogramDensity => ElementBounds::new("samples", 50, 150, 1, 1),
            ViolinBox => ElementBounds::new("samples per group", 20, 60, 2, 5),
            ScatterHistogram => ElementBounds::new("points", 30, 100, 1, 1),
            ScatterDensity => ElementBounds::new("points", 30, 100, 1, 1),
            HexbinHist => ElementBounds::new("points", 100, 300, 1, 1),
        }
    }

    /// Parameter description handed to the generator prompt.
    pub fn parameter_description(self) -> &'static str {
        use ChartType::*;
        match self {
            Line => "series: one entry per line; x: strictly increasing numbers or ordered category labels shared by all lines; y: one value per x.",
            Bar => "series: one entry per bar group; x: category labels shared by all groups; y: bar heights.",
            Pie => "series: exactly one; x: slice labels; y: positive slice values.",
            Area => "series: one entry per stacked layer; x: strictly increasing numbers shared by all layers; y: non-negative layer values.",
            ErrorPoint => "series: one entry per point set; x: category labels; y: point estimates; aux.err: non-negative error magnitudes.",
            Treemap => "series: exactly one; x: tile labels; y: positive tile sizes.",
            Funnel => "series: exactly one; x: stage labels in order; y: positive stage volumes.",
            Node => "series: exactly one; x: node labels; y: positive node weights; aux.target: index of the node each node links to.",
            Density => "series: one entry per distribution; x: sample index 0..n-1; y: raw samples.",
            Histogram => "series: one entry per distribution; x: sample index 0..n-1; y: raw samples.",
            Box => "series: one entry per group; x: sample index 0..n-1; y: raw samples of the group.",
            Bubble => "series: one entry per bubble set; x: numeric positions; y: numeric values; aux.size: positive bubble sizes.",
            Candlestick => "series: exactly one; x: ordered period labels; y: closing values; aux.open/high/low/close with low <= min(open, close) <= max(open, close) <= high.",
            Heatmap => "series: one entry per matrix row, label is the row label; x: column labels shared by all rows; y: cell values.",
            Radar => "series: one entry per profile; x: axis labels shared by all profiles; y: non-negative scores.",
            Rose => "series: exactly one; x: sector labels; y: positive sector magnitudes.",
            ThreeD => "series: one entry per depth row; x: category labels shared by all rows; y: bar heights.",
            ErrorBar => "series: one entry per bar group; x: category labels shared by all groups; y: bar heights; aux.err: non-negative error magnitudes.",
            Quiver => "series: exactly one; x and y: numeric anchor positions; aux.u and aux.v: vector components.",
            Scatter => "series: one entry per point cloud; x: numeric positions; y: numeric values.",
            Violin => "series: one entry per group; x: sample index 0..n-1; y: raw samples of the group.",
            Contour => "series: one entry per grid row, label is the row coordinate; x: strictly increasing numeric column coordinates shared by all rows; y: field values.",
            BarLine => "series: role base for the bars, role overlay for the line drawn on a secondary axis; x: category labels shared by both.",
            PieBar => "series: role base for the pie (x labels, positive y), role overlay for the bar breakdown of the first slice (x labels, positive y).",
            HistogramDensity => "series: role base holds the raw samples for the histogram; role overlay holds the samples whose density curve is drawn on top.",
            ViolinBox => "series: role base groups drawn as violins; role overlay groups drawn as boxes at the same positions; x: sample index.",
            ScatterHistogram => "series: role base holds the (x, y) points; role overlay holds the values shown as a marginal histogram.",
            ScatterDensity => "series: role base holds the (x, y) points; role overlay holds the values shown as a marginal density curve.",
            HexbinHist => "series: role base holds the (x, y) points binned into hexagons; role overlay holds the values shown as a marginal histogram.",
        }
    }
}

impl fmt::Display for ChartType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChartType {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(' ', "");
        let norm = norm.trim_end_matches("overlay");
        ChartType::ALL
            .into_iter()
            .find(|t| t.as_str() == norm)
            .ok_or_else(|| ParseError::UnknownChartType(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_two_base_and_seven_overlays() {
        assert_eq!(ChartType::ALL.len(), 29);
        assert_eq!(ChartType::base_types().count(), 22);
        assert_eq!(ChartType::overlay_types().count(), 7);
    }

    #[test]
    fn names_round_trip() {
        for t in ChartType::ALL {
            assert_eq!(t.as_str().parse::<ChartType>().unwrap(), t);
            let json = serde_json::to_string(&t).unwrap();
            assert_eq!(json, format!("\"{}\"", t.as_str()));
        }
        assert_eq!("bar + line overlay".parse::<ChartType>().unwrap(), ChartType::BarLine);
        assert!("sankey".parse::<ChartType>().is_err());
    }

    #[test]
    fn bounds_are_sane() {
        for t in ChartType::ALL {
            let b = t.bounds();
            assert!(b.min >= 1 && b.min <= b.max, "{t}");
            assert!(b.series_min >= 1 && b.series_min <= b.series_max, "{t}");
        }
        assert!(ChartType::Heatmap.bounds().max <= 12 && ChartType::Heatmap.bounds().series_max <= 12);
    }
}
