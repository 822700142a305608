//! Question-answer pairs read straight off a figure spec, for stub mode.

use rand::seq::SliceRandom;
use rand::Rng;

use super::QaKind;
use crate::gateway::QaItemPayload;
use crate::model::{ChartType, DataSeries, DataShape, FigureSpec, Subplot};
use crate::util::{fmt_num, round_to};

/// Share of generated pairs the stub reports with less than full confidence.
const LOW_CONFIDENCE_RATE: f64 = 0.08;

/// Types whose y values can be read point by point from the image.
fn values_readable(ty: ChartType) -> bool {
    use ChartType::*;
    matches!(
        ty,
        Line | Area
            | Bar
            | ErrorBar
            | ErrorPoint
            | Pie
            | Funnel
            | Radar
            | Rose
            | ThreeD
            | Candlestick
            | BarLine
            | PieBar
    )
}

fn num(v: f64) -> String {
    fmt_num(round_to(v, 2))
}

struct Ctx<'a> {
    sp: &'a Subplot,
    /// `"In subplot 2, "` for multi-subplot figures, empty otherwise.
    lead: String,
    at: String,
}

impl Ctx<'_> {
    fn q(&self, body: &str) -> String {
        if self.lead.is_empty() {
            let mut c = body.chars();
            match c.next() {
                Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
                None => String::new(),
            }
        } else {
            format!("{}{body}", self.lead)
        }
    }
}

fn item(question: String, answer: String, category: &str, spec_ref: Option<String>) -> QaItemPayload {
    QaItemPayload { question, answer, rationale: None, category: Some(category.into()), confidence: 5, spec_ref }
}

fn reasoned(question: String, answer: String, rationale: String, category: &str) -> QaItemPayload {
    QaItemPayload {
        question,
        answer,
        rationale: Some(rationale),
        category: Some(category.into()),
        confidence: 5,
        spec_ref: None,
    }
}

fn contexts(spec: &FigureSpec) -> Vec<Ctx<'_>> {
    let mut cells: Vec<&Subplot> = spec.subplots.iter().collect();
    cells.sort_by_key(|s| s.cell);
    let multi = cells.len() > 1;
    cells
        .into_iter()
        .enumerate()
        .map(|(i, sp)| Ctx {
            sp,
            lead: if multi { format!("in subplot {}, ", sp.cell + 1) } else { String::new() },
            at: format!("subplots[{i}]"),
        })
        .collect()
}

fn descriptive_pool(spec: &FigureSpec) -> Vec<QaItemPayload> {
    let mut pool = Vec::new();
    if spec.subplots.len() > 1 {
        pool.push(item(
            "How many subplots does the figure contain?".into(),
            spec.subplots.len().to_string(),
            "graphical",
            None,
        ));
        pool.push(item(
            "How are the subplots arranged (rows x columns)?".into(),
            format!("{} x {}", spec.layout.rows, spec.layout.cols),
            "graphical",
            None,
        ));
        if let Some(t) = &spec.overall_title {
            pool.push(item(
                "What is the overall title of the figure?".into(),
                t.clone(),
                "textual",
                Some("overall_title".into()),
            ));
        }
    }
    for c in contexts(spec) {
        let s = &c.sp.spec;
        let base: Vec<&DataSeries> = s.base_series().collect();
        pool.push(item(
            c.q("what is the title of the chart?"),
            s.title.clone(),
            "textual",
            Some(format!("{}.title", c.at)),
        ));
        pool.push(item(
            c.q("what is the label of the x-axis?"),
            s.x_label.clone(),
            "textual",
            Some(format!("{}.x_label", c.at)),
        ));
        pool.push(item(
            c.q("what is the label of the y-axis?"),
            s.y_label.clone(),
            "textual",
            Some(format!("{}.y_label", c.at)),
        ));
        pool.push(item(c.q("what type of chart is shown?"), s.chart_type.display_name().into(), "graphical", None));
        if base.len() > 1 {
            pool.push(item(
                c.q("how many data series are shown in the legend?"),
                base.len().to_string(),
                "numerical",
                None,
            ));
            pool.push(item(
                c.q("what is the legend label of the first data series?"),
                base[0].label.clone(),
                "textual",
                Some(format!("{}.series[0].label", c.at)),
            ));
        }
        if let Some(first) = base.first() {
            if matches!(s.chart_type.shape(), DataShape::Categorical) {
                pool.push(item(c.q("how many categories are shown?"), first.x.len().to_string(), "numerical", None));
            }
            if values_readable(s.chart_type) && !first.y.is_empty() {
                let k = first.y.len() / 2;
                pool.push(item(
                    c.q(&format!("what is the value of {} at {}?", first.label, first.x[k])),
                    num(first.y[k]),
                    "numerical",
                    Some(format!("{}.series[0].y[{k}]", c.at)),
                ));
            }
        }
    }
    pool
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

fn reasoning_pool(spec: &FigureSpec) -> Vec<QaItemPayload> {
    let mut pool = Vec::new();
    let ctxs = contexts(spec);
    for c in &ctxs {
        let s = &c.sp.spec;
        let base: Vec<&DataSeries> = s.base_series().collect();
        let Some(first) = base.first() else { continue };
        if first.y.is_empty() {
            continue;
        }
        if values_readable(s.chart_type) {
            let (imax, vmax) =
                first.y.iter().copied().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty");
            let (imin, vmin) =
                first.y.iter().copied().enumerate().min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty");
            let listing =
                first.x.iter().zip(&first.y).map(|(x, y)| format!("{x}: {}", num(*y))).collect::<Vec<_>>().join(", ");
            pool.push(reasoned(
                c.q(&format!("at which {} does {} reach its highest value?", s.x_label, first.label)),
                first.x[imax].to_string(),
                format!("Reading {}: {listing}. The largest is {} at {}.", first.label, num(vmax), first.x[imax]),
                "comparison",
            ));
            pool.push(reasoned(
                c.q(&format!("what is the difference between the highest and lowest values of {}?", first.label)),
                num(vmax - vmin),
                format!(
                    "The highest value is {} at {} and the lowest is {} at {}; {} - {} = {}.",
                    num(vmax),
                    first.x[imax],
                    num(vmin),
                    first.x[imin],
                    num(vmax),
                    num(vmin),
                    num(vmax - vmin)
                ),
                "difference",
            ));
            let total: f64 = first.y.iter().sum();
            pool.push(reasoned(
                c.q(&format!(
                    "what is the average value of {} across all {} shown?",
                    first.label,
                    s.chart_type.bounds().noun
                )),
                num(total / first.y.len() as f64),
                format!(
                    "The values sum to {} over {} entries, so the mean is {}.",
                    num(total),
                    first.y.len(),
                    num(total / first.y.len() as f64)
                ),
                "aggregate",
            ));
            let (a, b) = (first.y[0], *first.y.last().expect("non-empty"));
            pool.push(reasoned(
                c.q(&format!("is the last value of {} higher than the first?", first.label)),
                if b > a { "Yes" } else { "No" }.into(),
                format!("The first value is {} and the last is {}.", num(a), num(b)),
                "trend",
            ));
        }
        if matches!(s.chart_type.shape(), DataShape::Samples) && base.len() > 1 {
            let medians: Vec<f64> = base.iter().map(|b| median(&b.y)).collect();
            let best = medians.iter().copied().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty").0;
            let listing = base
                .iter()
                .zip(&medians)
                .map(|(b, m)| format!("{}: {}", b.label, num(*m)))
                .collect::<Vec<_>>()
                .join(", ");
            pool.push(reasoned(
                c.q("which group has the highest median?"),
                base[best].label.clone(),
                format!("Medians per group are {listing}; the highest belongs to {}.", base[best].label),
                "comparison",
            ));
        }
        if base.len() > 1 && values_readable(s.chart_type) {
            let totals: Vec<f64> = base.iter().map(|b| b.y.iter().sum()).collect();
            let best = totals.iter().copied().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty").0;
            pool.push(reasoned(
                c.q("which data series has the largest total across all categories?"),
                base[best].label.clone(),
                format!(
                    "Series totals: {}. The largest is {}.",
                    base.iter()
                        .zip(&totals)
                        .map(|(b, t)| format!("{} = {}", b.label, num(*t)))
                        .collect::<Vec<_>>()
                        .join(", "),
                    base[best].label
                ),
                "comparison",
            ));
        }
    }
    let peaks: Vec<(usize, f64)> = ctxs
        .iter()
        .filter(|c| values_readable(c.sp.spec.chart_type))
        .filter_map(|c| {
            let m = c.sp.spec.base_series().flat_map(|s| s.y.iter().copied()).fold(f64::NEG_INFINITY, f64::max);
            m.is_finite().then_some((c.sp.cell + 1, m))
        })
        .collect();
    if peaks.len() > 1 {
        let best = peaks.iter().copied().max_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty");
        pool.push(reasoned(
            "Which subplot shows the single largest plotted value?".into(),
            format!("Subplot {}", best.0),
            format!(
                "Maxima per subplot: {}. The largest is in subplot {}.",
                peaks.iter().map(|(c, m)| format!("subplot {c} = {}", num(*m))).collect::<Vec<_>>().join(", "),
                best.0
            ),
            "cross-subplot",
        ));
    }
    pool
}

/// Up to `count` pairs of the requested kind, in a seed-dependent order.
pub fn synthesize_qas<R: Rng>(spec: &FigureSpec, kind: QaKind, count: usize, rng: &mut R) -> Vec<QaItemPayload> {
    let mut pool = match kind {
        QaKind::Descriptive => descriptive_pool(spec),
        QaKind::Reasoning => reasoning_pool(spec),
    };
    pool.shuffle(rng);
    pool.truncate(count);
    for q in &mut pool {
        if rng.random_bool(LOW_CONFIDENCE_RATE) {
            q.confidence = rng.random_range(3..=4);
        }
    }
    pool
}
