//! Deterministic chart-data synthesizer. It stands in for the language model
//! in stub mode and produces the few-shot examples shown to live models.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::gateway::ChartPayload;
use crate::model::{Annotation, AnnotationKind, ChartType, DataSeries, Style, Theme, Trend, XValue, COLORMAPS};
use crate::stats::{agrees_with_direction, spearman_vs_index};
use crate::util::round_to;

const PALETTE: &[&str] = &[
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#264653", "#2a9d8f", "#e9c46a", "#f4a261", "#e76f51", "#6d597a", "#b56576", "#355070", "#588157", "#bc6c25",
];
const PLOT_MARKERS: &[&str] = &["o", "s", "^", "v", "D", "p", "h", "*"];
const PLOT_LINES: &[&str] = &["-", "--", "-.", ":"];
const LEGEND_SPOTS: &[&str] = &["best", "upper left", "upper right", "lower right", "lower left"];
const MONTHS: &[&str] = &["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"];
const COMPASS: &[&str] =
    &["N", "NNE", "NE", "ENE", "E", "ESE", "SE", "SSE", "S", "SSW", "SW", "WSW", "W", "WNW", "NW", "NNW"];

/// Synthesizes one chart's data and arguments. `text_theme` sets the words
/// used in titles and labels; it differs from `theme` only to model a
/// generator that drifted off topic.
pub fn synthesize_chart<R: Rng>(
    ty: ChartType,
    theme: Theme,
    text_theme: Theme,
    trend: Trend,
    element_count: usize,
    rng: &mut R,
) -> ChartPayload {
    let b = ty.bounds();
    let n = element_count.clamp(b.min, b.max);
    let vocab = theme.vocabulary();
    let text_vocab = text_theme.vocabulary();
    let (measure, unit) = *text_vocab.measures.choose(rng).expect("non-empty measures");
    let scale = Scale::sample(rng);
    let k = rng.random_range(b.series_min..=b.series_max.min(b.series_min.max(4)));

    let mut x_label = capitalize(text_vocab.keywords[1]);
    let mut y_label = format!("{measure} ({unit})");
    let trend_used = if ty.carries_trend() { trend } else { Trend::Stable };
    let series: Vec<DataSeries> = match ty {
        ChartType::Line | ChartType::Area => {
            x_label = "Year".into();
            let start = rng.random_range(1990..=2015) as f64;
            let x: Vec<XValue> = (0..n).map(|i| XValue::Num(start + i as f64)).collect();
            let labels = pick_distinct(rng, vocab.categories, k);
            labels
                .into_iter()
                .map(|label| DataSeries::new(label, x.clone(), scale.trend(rng, n, trend, 0.08)))
                .collect()
        }
        ChartType::Bar | ChartType::ThreeD | ChartType::ErrorBar | ChartType::ErrorPoint | ChartType::Radar => {
            let cats = pick_distinct(rng, vocab.categories, n + k);
            let x: Vec<XValue> = cats[..n].iter().cloned().map(XValue::Cat).collect();
            let labels: Vec<String> = if k == 1 { vec![measure.to_string()] } else { cats[n..].to_vec() };
            let radar = ty == ChartType::Radar;
            labels
                .into_iter()
                .map(|label| {
                    let y = if radar {
                        Scale::percent().trend(rng, n, trend, 0.1)
                    } else {
                        scale.trend(rng, n, trend, 0.1)
                    };
                    let s = DataSeries::new(label, x.clone(), y.clone());
                    if matches!(ty, ChartType::ErrorBar | ChartType::ErrorPoint) {
                        let err = y.iter().map(|v| scale.round(v.abs() * rng.random_range(0.05..0.15))).collect();
                        s.with_aux("err", err)
                    } else {
                        s
                    }
                })
                .collect()
        }
        ChartType::Pie | ChartType::Treemap | ChartType::Funnel | ChartType::Rose => {
            let labels: Vec<String> = match ty {
                ChartType::Rose if n <= 12 && rng.random_bool(0.5) => {
                    MONTHS[..n].iter().map(|s| s.to_string()).collect()
                }
                ChartType::Rose => evenly(COMPASS, n),
                _ => pick_distinct(rng, vocab.categories, n),
            };
            let y = if ty == ChartType::Funnel {
                let mut v = scale.trend(rng, n, Trend::Decreasing, 0.02);
                v.sort_by(|a, b| b.total_cmp(a));
                v
            } else {
                scale.trend(rng, n, trend_used, 0.1)
            };
            vec![DataSeries::new(measure, labels.into_iter().map(XValue::Cat).collect(), y)]
        }
        ChartType::Node => {
            let labels = pick_distinct(rng, vocab.categories, n);
            let y = scale.trend(rng, n, Trend::Stable, 0.3);
            let target: Vec<f64> = (0..n)
                .map(|i| if i == 0 { rng.random_range(1..n) as f64 } else { rng.random_range(0..i) as f64 })
                .collect();
            vec![DataSeries::new(measure, labels.into_iter().map(XValue::Cat).collect(), y).with_aux("target", target)]
        }
        ChartType::Density | ChartType::Histogram | ChartType::Box | ChartType::Violin => {
            x_label = "Sample".into();
            let labels = pick_distinct(rng, vocab.categories, k);
            labels.into_iter().map(|label| DataSeries::new(label, index_x(n), scale.samples(rng, n))).collect()
        }
        ChartType::HistogramDensity | ChartType::ViolinBox => {
            x_label = "Sample".into();
            let kb = if ty == ChartType::HistogramDensity { 1 } else { k };
            let labels = pick_distinct(rng, vocab.categories, kb);
            let base: Vec<DataSeries> =
                labels.into_iter().map(|label| DataSeries::new(label, index_x(n), scale.samples(rng, n))).collect();
            let overlay: Vec<DataSeries> = base
                .iter()
                .map(|s| {
                    let label = if ty == ChartType::HistogramDensity { "Density".to_string() } else { s.label.clone() };
                    DataSeries::new(label, s.x.clone(), s.y.clone()).with_role(crate::model::SeriesRole::Overlay)
                })
                .collect();
            base.into_iter().chain(overlay).collect()
        }
        ChartType::Scatter | ChartType::Bubble => {
            let (m2, u2) = *text_vocab.measures.choose(rng).expect("non-empty measures");
            x_label = format!("{m2} ({u2})");
            let labels = pick_distinct(rng, vocab.categories, k);
            labels
                .into_iter()
                .map(|label| {
                    let x = scale.sorted_positions(rng, n);
                    let y = scale.trend(rng, n, trend, 0.25);
                    let s = DataSeries::new(label, x.into_iter().map(XValue::Num).collect(), y);
                    if ty == ChartType::Bubble {
                        let size = (0..n).map(|_| round_to(rng.random_range(5.0..100.0), 1)).collect();
                        s.with_aux("size", size)
                    } else {
                        s
                    }
                })
                .collect()
        }
        ChartType::Candlestick => {
            x_label = "Week".into();
            let close = scale.trend(rng, n, trend, 0.05);
            let mut open = Vec::with_capacity(n);
            let mut high = Vec::with_capacity(n);
            let mut low = Vec::with_capacity(n);
            for (i, c) in close.iter().enumerate() {
                let o = if i == 0 { scale.round(c * rng.random_range(0.95..1.05)) } else { close[i - 1] };
                let top = o.max(*c);
                let bottom = o.min(*c);
                high.push(scale.round_up(top * rng.random_range(1.005..1.04)));
                low.push(scale.round_down(bottom * rng.random_range(0.96..0.995)));
                open.push(o);
            }
            let x = (1..=n).map(|i| XValue::Cat(format!("W{i}"))).collect();
            vec![DataSeries::new(measure, x, close.clone())
                .with_aux("open", open)
                .with_aux("high", high)
                .with_aux("low", low)
                .with_aux("close", close)]
        }
        ChartType::Heatmap => {
            let rows = rng.random_range(b.series_min..=8);
            let cols: Vec<XValue> = if n <= 12 && rng.random_bool(0.5) {
                MONTHS[..n].iter().map(|m| XValue::Cat(m.to_string())).collect()
            } else {
                (1..=n).map(|i| XValue::Cat(format!("Q{i}"))).collect()
            };
            x_label =
                if matches!(cols[0], XValue::Cat(ref c) if c == "Jan") { "Month".into() } else { "Quarter".into() };
            pick_distinct(rng, vocab.categories, rows)
                .into_iter()
                .map(|label| DataSeries::new(label, cols.clone(), Scale::percent().trend(rng, n, Trend::Stable, 0.35)))
                .collect()
        }
        ChartType::Contour => {
            let rows = n.clamp(b.series_min, b.series_max);
            let xs: Vec<f64> = (0..n).map(|i| round_to(i as f64 * 0.5, 2)).collect();
            let (cx, cy) = (rng.random_range(0.3..0.7), rng.random_range(0.3..0.7));
            let (dx, dy) = (rng.random_range(0.1..0.4), rng.random_range(0.1..0.4));
            let amp = scale.magnitude;
            x_label = "Distance (km)".into();
            (0..rows)
                .map(|r| {
                    let ry = r as f64 * 0.5;
                    let fy = r as f64 / (rows - 1).max(1) as f64;
                    let y = (0..n)
                        .map(|c| {
                            let fx = c as f64 / (n - 1).max(1) as f64;
                            let bump1 = (-((fx - cx).powi(2) + (fy - cy).powi(2)) / 0.08).exp();
                            let bump2 = (-((fx - dx).powi(2) + (fy - 1.0 + dy).powi(2)) / 0.05).exp();
                            round_to(amp * (bump1 + 0.6 * bump2), 2)
                        })
                        .collect();
                    DataSeries::new(crate::util::fmt_num(ry), xs.iter().copied().map(XValue::Num).collect(), y)
                })
                .collect()
        }
        ChartType::Quiver => {
            x_label = "East (km)".into();
            y_label = "North (km)".into();
            let cols = (n as f64).sqrt().ceil() as usize;
            let x = (0..n).map(|i| XValue::Num((i % cols) as f64)).collect();
            let y = (0..n).map(|i| (i / cols) as f64).collect();
            let rot = rng.random_range(0.0..std::f64::consts::TAU);
            let u = (0..n).map(|i| round_to((rot + i as f64 * 0.4).cos(), 2)).collect();
            let v = (0..n).map(|i| round_to((rot + i as f64 * 0.4).sin(), 2)).collect();
            vec![DataSeries::new(measure, x, y).with_aux("u", u).with_aux("v", v)]
        }
        ChartType::BarLine => {
            let cats = pick_distinct(rng, vocab.categories, n);
            let x: Vec<XValue> = cats.into_iter().map(XValue::Cat).collect();
            let (m2, _) = *text_vocab.measures.iter().find(|(m, _)| *m != measure).unwrap_or(&(measure, unit));
            vec![
                DataSeries::new(measure, x.clone(), scale.trend(rng, n, trend, 0.1)),
                DataSeries::new(format!("{m2} share"), x, Scale::percent().trend(rng, n, trend, 0.1))
                    .with_role(crate::model::SeriesRole::Overlay),
            ]
        }
        ChartType::PieBar => {
            let cats = pick_distinct(rng, vocab.categories, n);
            let pie = scale.trend(rng, n, Trend::Stable, 0.3);
            let first = cats[0].clone();
            let parts: Vec<f64> = {
                let w: Vec<f64> = (0..3).map(|_| rng.random_range(1.0..3.0)).collect();
                let total: f64 = w.iter().sum();
                w.iter().map(|v| scale.round((v / total * pie[0]).max(scale.step()))).collect()
            };
            let sub = ["A", "B", "C"].iter().map(|s| XValue::Cat(format!("{first} {s}"))).collect();
            vec![
                DataSeries::new(measure, cats.into_iter().map(XValue::Cat).collect(), pie),
                DataSeries::new(format!("{first} breakdown"), sub, parts).with_role(crate::model::SeriesRole::Overlay),
            ]
        }
        ChartType::ScatterHistogram | ChartType::ScatterDensity | ChartType::HexbinHist => {
            let (m2, u2) = *text_vocab.measures.choose(rng).expect("non-empty measures");
            x_label = format!("{m2} ({u2})");
            let x = scale.sorted_positions(rng, n);
            let y = if ty == ChartType::HexbinHist { scale.samples(rng, n) } else { scale.trend(rng, n, trend, 0.3) };
            let label = pick_distinct(rng, vocab.categories, 1).remove(0);
            vec![
                DataSeries::new(label, x.into_iter().map(XValue::Num).collect(), y.clone()),
                DataSeries::new(format!("{measure} distribution"), index_x(n), y)
                    .with_role(crate::model::SeriesRole::Overlay),
            ]
        }
    };

    let title = title_for(rng, text_theme, measure, trend_used, ty);
    let style = style_for(rng, ty, series.iter().filter(|s| s.role == crate::model::SeriesRole::Base).count());
    let annotations = annotations_for(rng, ty, &series);
    ChartPayload { title, x_label, y_label, series, style, annotations, trend_hint: Some(trend_used) }
}

/// Value range and rounding for one chart.
#[derive(Debug, Clone, Copy)]
struct Scale {
    magnitude: f64,
    decimals: i32,
}

impl Scale {
    fn sample<R: Rng>(rng: &mut R) -> Self {
        let exp = rng.random_range(0..4);
        let magnitude = 10f64.powi(exp) * rng.random_range(1.0..5.0);
        Self { magnitude, decimals: if exp >= 2 { 0 } else { 1 } }
    }

    fn percent() -> Self {
        Self { magnitude: 60.0, decimals: 1 }
    }

    fn step(&self) -> f64 {
        10f64.powi(-self.decimals)
    }

    fn round(&self, v: f64) -> f64 {
        round_to(v, self.decimals)
    }

    fn round_up(&self, v: f64) -> f64 {
        let p = 10f64.powi(self.decimals);
        (v * p).ceil() / p
    }

    fn round_down(&self, v: f64) -> f64 {
        let p = 10f64.powi(self.decimals);
        (v * p).floor() / p
    }

    /// Positive values following `trend`, with Spearman sign guaranteed for
    /// increasing/decreasing.
    fn trend<R: Rng>(&self, rng: &mut R, n: usize, trend: Trend, noise: f64) -> Vec<f64> {
        let lo = self.magnitude * rng.random_range(0.3..0.6);
        let hi = self.magnitude * rng.random_range(1.2..1.8);
        let span = hi - lo;
        let noise = Normal::new(0.0, noise * span).expect("valid sigma");
        let floor = self.step().max(lo * 0.2);
        let mid = (lo + hi) / 2.0;
        let mut v: Vec<f64> = (0..n)
            .map(|i| {
                let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
                let center = match trend {
                    Trend::Increasing => lo + span * t,
                    Trend::Decreasing => hi - span * t,
                    Trend::Stable => mid,
                };
                let scale = if trend == Trend::Stable { 0.4 } else { 1.0 };
                self.round((center + scale * noise.sample(rng)).max(floor))
            })
            .collect();
        let rho = spearman_vs_index(&v);
        match trend {
            Trend::Increasing if rho <= 0.0 || rho.is_nan() => v.sort_by(f64::total_cmp),
            Trend::Decreasing if rho >= 0.0 || rho.is_nan() => v.sort_by(|a, b| b.total_cmp(a)),
            _ => {}
        }
        // Rounding can flatten a short series into ties; nudge the ends apart.
        if trend != Trend::Stable && n > 1 && !agrees_with_direction(spearman_vs_index(&v), sign(trend)) {
            let step = self.step();
            let last = n - 1;
            match trend {
                Trend::Increasing => v[last] = self.round(v[last].max(v[0]) + step),
                _ => v[0] = self.round(v[0].max(v[last]) + step),
            }
        }
        v
    }

    fn samples<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        let mu = self.magnitude * rng.random_range(0.8..1.2);
        let sd = self.magnitude * rng.random_range(0.1..0.3);
        let dist = Normal::new(mu, sd).expect("valid sigma");
        (0..n).map(|_| self.round(dist.sample(rng))).collect()
    }

    /// Strictly increasing positions.
    fn sorted_positions<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        let mut x = 0.0;
        (0..n)
            .map(|_| {
                x += rng.random_range(1.0..3.0);
                round_to(x, 1)
            })
            .collect()
    }
}

fn sign(t: Trend) -> f64 {
    match t {
        Trend::Increasing => 1.0,
        Trend::Decreasing => -1.0,
        Trend::Stable => 0.0,
    }
}

fn index_x(n: usize) -> Vec<XValue> {
    (0..n).map(|i| XValue::Num(i as f64)).collect()
}

fn evenly(pool: &[&str], n: usize) -> Vec<String> {
    (0..n).map(|i| pool[i * pool.len() / n].to_string()).collect()
}

fn pick_distinct<R: Rng>(rng: &mut R, pool: &[&str], n: usize) -> Vec<String> {
    let mut out: Vec<String> = pool.choose_multiple(rng, n.min(pool.len())).map(|s| s.to_string()).collect();
    let mut i = 2;
    while out.len() < n {
        out.push(format!("{} {i}", pool[out.len() % pool.len()]));
        i += 1;
    }
    out
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn title_for<R: Rng>(rng: &mut R, theme: Theme, measure: &str, trend: Trend, ty: ChartType) -> String {
    let vocab = theme.vocabulary();
    let keyword = capitalize(vocab.keywords.choose(rng).expect("keywords"));
    let adjective = match trend {
        Trend::Increasing => "Rising",
        Trend::Decreasing => "Declining",
        Trend::Stable => "Steady",
    };
    match rng.random_range(0..5) {
        0 => format!("{measure} by {keyword} Group"),
        1 if ty.carries_trend() => format!("{adjective} {measure} in {}", theme.name()),
        2 => format!("{}: {measure} Overview", theme.name()),
        3 => format!("Distribution of {measure} across {keyword} Categories"),
        _ => format!("{measure} in {} Studies", theme.name()),
    }
}

fn style_for<R: Rng>(rng: &mut R, ty: ChartType, k: usize) -> Style {
    let mut style = Style {
        colors: PALETTE.choose_multiple(rng, k.max(1)).map(|s| s.to_string()).collect(),
        grid: Some(rng.random_bool(0.5)),
        ..Style::default()
    };
    if matches!(ty, ChartType::Line | ChartType::Scatter | ChartType::ErrorPoint | ChartType::Radar) {
        style.markers = PLOT_MARKERS.choose_multiple(rng, k).map(|s| s.to_string()).collect();
    }
    if matches!(ty, ChartType::Line | ChartType::Radar) {
        style.line_styles = (0..k).map(|_| PLOT_LINES.choose(rng).expect("styles").to_string()).collect();
        style.line_width = Some(round_to(rng.random_range(1.5..3.0), 1));
    }
    if matches!(
        ty,
        ChartType::Area
            | ChartType::Scatter
            | ChartType::Bubble
            | ChartType::Density
            | ChartType::Histogram
            | ChartType::Violin
            | ChartType::HistogramDensity
            | ChartType::ScatterHistogram
            | ChartType::ScatterDensity
    ) {
        style.alpha = Some(round_to(rng.random_range(0.55..0.9), 2));
    }
    if matches!(ty, ChartType::Heatmap | ChartType::Contour | ChartType::HexbinHist | ChartType::Treemap) {
        style.colormap = Some(COLORMAPS.choose(rng).expect("colormaps").to_string());
    }
    if k > 1 {
        style.legend_loc = Some(LEGEND_SPOTS.choose(rng).expect("legend").to_string());
    }
    style
}

fn annotations_for<R: Rng>(rng: &mut R, ty: ChartType, series: &[DataSeries]) -> Vec<Annotation> {
    if !matches!(ty, ChartType::Line | ChartType::Bar | ChartType::Area | ChartType::Scatter) || !rng.random_bool(0.25)
    {
        return Vec::new();
    }
    let s = &series[0];
    let (i, y) = s.y.iter().copied().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty series");
    let x = s.x[i].as_f64().unwrap_or(i as f64);
    vec![Annotation { kind: AnnotationKind::Text, x, y, text: format!("Peak {}", crate::util::fmt_num(y)) }]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_chart_spec, ChartSpec};
    use crate::util::rng_from;

    fn to_spec(ty: ChartType, theme: Theme, p: ChartPayload) -> ChartSpec {
        ChartSpec {
            chart_type: ty,
            theme,
            title: p.title,
            x_label: p.x_label,
            y_label: p.y_label,
            series: p.series,
            style: p.style,
            trend_hint: p.trend_hint.unwrap_or(Trend::Stable),
            annotations: p.annotations,
        }
    }

    #[test]
    fn every_type_synthesizes_valid_data_across_seeds() {
        for ty in ChartType::ALL {
            let b = ty.bounds();
            for seed in 0..12u64 {
                let mut rng = rng_from(seed);
                let n = b.min + (seed as usize % (b.max - b.min + 1));
                let trend = Trend::ALL[seed as usize % 3];
                let theme = Theme::ALL[seed as usize % 25];
                let p = synthesize_chart(ty, theme, theme, trend, n, &mut rng);
                let report = validate_chart_spec(&to_spec(ty, theme, p));
                assert!(report.is_empty(), "{ty} seed {seed}: {report}");
            }
        }
    }

    #[test]
    fn requested_trend_sign_holds_for_trend_types() {
        for ty in ChartType::ALL.into_iter().filter(|t| t.carries_trend() && !matches!(t, ChartType::Funnel)) {
            for seed in 0..20u64 {
                for trend in [Trend::Increasing, Trend::Decreasing] {
                    let mut rng = rng_from(seed);
                    let n = ty.bounds().min;
                    let p = synthesize_chart(ty, Theme::Physics, Theme::Physics, trend, n, &mut rng);
                    let s = &p.series[0];
                    let rho = spearman_vs_index(&s.y);
                    assert!(rho * sign(trend) > 0.0, "{ty} {trend} seed {seed}: rho {rho} y {:?}", s.y);
                }
            }
        }
    }

    #[test]
    fn element_count_is_honoured() {
        let mut rng = rng_from(1);
        let p = synthesize_chart(ChartType::Pie, Theme::Economics, Theme::Economics, Trend::Stable, 5, &mut rng);
        assert_eq!(p.series.len(), 1);
        assert_eq!(p.series[0].y.len(), 5);
        assert!(p.series[0].y.iter().all(|v| *v > 0.0));
    }
}
