//! Shared domain types: chart kinds, themes, layouts, chart/figure specs and
//! their validation.

mod chart_type;
mod layout;
mod spec;
mod theme;
pub mod validate;

pub use chart_type::{ChartType, DataShape, ElementBounds};
pub use layout::{parse_layout, Layout, MAX_CELLS};
pub use spec::{
    Annotation, AnnotationKind, ChartSpec, DataSeries, FigureSpec, GenerationTask, SeriesRole, Style, Subplot, Trend,
    XValue, COLORMAPS, LEGEND_LOCATIONS, LINE_STYLES, MARKERS,
};
pub use theme::{Theme, ThemeVocabulary};
pub use validate::{validate_chart_spec, validate_figure_spec, ValidationReport, Violation, ViolationCode};
