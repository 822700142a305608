use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::MetricsError;

/// Visual-change classes detected in a diversified program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeClass {
    LineColor,
    FontSize,
    LineWidth,
    Background,
    Transparency,
    Grid,
    Annotations,
    AreaShading,
    Arrows,
    ThresholdLines,
    AxisBorders,
    ZoomInsets,
    ErrorBars,
}

impl ChangeClass {
    pub const ALL: [ChangeClass; 13] = [
        Self::LineColor,
        Self::FontSize,
        Self::LineWidth,
        Self::Background,
        Self::Transparency,
        Self::Grid,
        Self::Annotations,
        Self::AreaShading,
        Self::Arrows,
        Self::ThresholdLines,
        Self::AxisBorders,
        Self::ZoomInsets,
        Self::ErrorBars,
    ];

    fn pattern(self) -> &'static str {
        match self {
            Self::LineColor => r#"set_color\(|\["colors"\]|prop_cycle|\bcolor\s*="#,
            Self::FontSize => r"fontsize|font\.size|labelsize|titlesize|set_size\(",
            Self::LineWidth => r"linewidth|set_linewidth|\blw\s*=",
            Self::Background => r"facecolor|style\.use|imshow\(",
            Self::Transparency => r"\balpha\s*=|set_alpha\(",
            Self::Grid => r"\.grid\(|axes\.grid",
            Self::Annotations => r"\.annotate\(|\.text\(",
            Self::AreaShading => r"fill_between|axvspan|axhspan|\.fill\(",
            Self::Arrows => r"arrowprops|\.arrow\(|FancyArrow",
            Self::ThresholdLines => r"axhline|axvline|\.hlines\(|\.vlines\(",
            Self::AxisBorders => r"spines|tick_params|set_frame_on",
            Self::ZoomInsets => r"inset_axes|indicate_inset_zoom|mark_inset",
            Self::ErrorBars => r"errorbar\(|\byerr\s*=|\bxerr\s*=",
        }
    }
}

fn detectors() -> &'static [(ChangeClass, Regex)] {
    static D: OnceLock<Vec<(ChangeClass, Regex)>> = OnceLock::new();
    D.get_or_init(|| ChangeClass::ALL.iter().map(|&c| (c, Regex::new(c.pattern()).expect("valid regex"))).collect())
}

/// Lines of `after` not present in `before`, as a multiset difference.
pub fn added_lines<'a>(before: &str, after: &'a str) -> Vec<&'a str> {
    let mut pool: BTreeMap<&str, usize> = BTreeMap::new();
    for l in before.lines() {
        *pool.entry(l.trim()).or_default() += 1;
    }
    after
        .lines()
        .filter(|l| match pool.get_mut(l.trim()) {
            Some(n) if *n > 0 => {
                *n -= 1;
                false
            }
            _ => true,
        })
        .collect()
}

/// Classes whose detector fires on at least one added line. Comment lines
/// are ignored so that a changed header does not count as a style change.
pub fn detect_changes(before: &str, after: &str) -> BTreeSet<ChangeClass> {
    let added: Vec<&str> =
        added_lines(before, after).into_iter().filter(|l| !l.trim_start().starts_with('#')).collect();
    detectors().iter().filter(|(_, re)| added.iter().any(|l| re.is_match(l))).map(|(c, _)| *c).collect()
}

pub const MANY_CHANGES: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleChangeReport {
    pub n_pairs: usize,
    /// Percentage of pairs showing each class.
    pub per_class_pct: BTreeMap<ChangeClass, f64>,
    /// Percentage of pairs with at least [`MANY_CHANGES`] classes.
    pub many_changes_pct: f64,
}

/// `pairs` are (figure_id, before source, after source).
pub fn style_change_stats(pairs: &[(String, String, String)]) -> Result<StyleChangeReport, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::Domain("no program pairs".into()));
    }
    let mut counts: BTreeMap<ChangeClass, usize> = ChangeClass::ALL.iter().map(|&c| (c, 0)).collect();
    let mut many = 0;
    for (_, before, after) in pairs {
        let found = detect_changes(before, after);
        many += (found.len() >= MANY_CHANGES) as usize;
        for c in found {
            *counts.get_mut(&c).expect("all classes seeded") += 1;
        }
    }
    let pct = |k: usize| 100.0 * k as f64 / pairs.len() as f64;
    Ok(StyleChangeReport {
        n_pairs: pairs.len(),
        per_class_pct: counts.into_iter().map(|(c, k)| (c, pct(k))).collect(),
        many_changes_pct: pct(many),
    })
}
