//! Built-in source edits that stand in for a model in stub mode. Each edit is
//! inserted at one of the program's hook comments; the data block is never
//! touched.

use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::Rng;

use super::Strategy;
use crate::model::Theme;
use crate::render::{header_value, insert_at_hook, DECORATE_HOOK, STYLE_HOOK};

const ACCENTS: &[&str] = &["#c0392b", "#8e44ad", "#d35400", "#16a085", "#2c3e50", "#b03a2e"];
const PALETTES: &[&[&str]] = &[
    &["#264653", "#2a9d8f", "#e9c46a", "#f4a261", "#e76f51"],
    &["#355070", "#6d597a", "#b56576", "#e56b6f", "#eaac8b"],
    &["#003f5c", "#58508d", "#bc5090", "#ff6361", "#ffa600"],
    &["#0b3954", "#087e8b", "#bfd7ea", "#ff5a5f", "#c81d25"],
];
const FONTS: &[&str] = &["serif", "sans-serif", "monospace"];
const GRADIENTS: &[&str] = &["Blues", "Greens", "Purples", "Oranges", "YlGnBu"];
const CALLOUTS: &[&str] = &["Peak region", "Notable change", "Key interval", "Focus window", "Turning point"];
/// Chart types whose drawing can be repeated inside a zoom inset.
const ZOOMABLE: &[&str] =
    &["line", "area", "scatter", "bubble", "errorpoint", "bar", "errorbar", "density", "histogram"];

/// Applies the strategy's edit plus a few random minor extras.
pub fn stub_transform<R: Rng>(strategy: Strategy, source: &str, rng: &mut R) -> String {
    let mut out = match strategy {
        Strategy::ArrowsAnnotationsHighlights => decorate(source, &annotations(rng)),
        Strategy::FontColorStyleSize => style(source, &fonts_and_colors(rng)),
        Strategy::GradientFillAreaShading => decorate(source, &shading(rng)),
        Strategy::RemoveAxisBorders => decorate(source, &borders(rng)),
        Strategy::ZoomInInsets => decorate(source, &zoom(rng)),
        Strategy::OverallTitle => decorate(source, &overall_title(source, rng)),
    };
    if strategy != Strategy::OverallTitle {
        for extra in extras(rng) {
            out = decorate(&out, &extra);
        }
    }
    out
}

fn decorate(source: &str, code: &str) -> String {
    insert_at_hook(source, DECORATE_HOOK, code).unwrap_or_else(|| format!("{source}\n{code}\n"))
}

fn style(source: &str, code: &str) -> String {
    insert_at_hook(source, STYLE_HOOK, code).unwrap_or_else(|| decorate(source, code))
}

fn frac<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo..hi) * 100.0).round() / 100.0
}

fn annotations<R: Rng>(rng: &mut R) -> String {
    let accent = ACCENTS.choose(rng).expect("accents");
    let level = frac(rng, 0.6, 0.85);
    let span_lo = frac(rng, 0.2, 0.5);
    let span_hi = span_lo + frac(rng, 0.1, 0.25);
    let callout = CALLOUTS.choose(rng).expect("callouts");
    format!(
        r#"for _ax in AXES:
    if _ax.name != "rectilinear":
        continue
    _xlo, _xhi = _ax.get_xlim()
    _ylo, _yhi = _ax.get_ylim()
    _ax.axhline(_ylo + {level} * (_yhi - _ylo), color="{accent}", linestyle="--", linewidth=1.2, alpha=0.8)
    _ax.axvspan(_xlo + {span_lo} * (_xhi - _xlo), _xlo + {span_hi} * (_xhi - _xlo), color="{accent}", alpha=0.1)
    _ax.annotate("{callout}", xy=(_xlo + {mid} * (_xhi - _xlo), _ylo + {level} * (_yhi - _ylo)),
                 xytext=(0.05, 0.93), textcoords="axes fraction", fontsize="small", color="{accent}",
                 arrowprops=dict(arrowstyle="->", color="{accent}"))
    _ax.set_xlim(_xlo, _xhi)
    _ax.set_ylim(_ylo, _yhi)
"#,
        mid = (span_lo + span_hi) / 2.0
    )
}

fn fonts_and_colors<R: Rng>(rng: &mut R) -> String {
    let size = rng.random_range(9..=13);
    let font = FONTS.choose(rng).expect("fonts");
    let palette = PALETTES.choose(rng).expect("palettes");
    let ink = ["#222222", "#333333", "#2f3e46", "#3d405b"].choose(rng).expect("ink");
    let colors = palette.iter().map(|c| format!("\"{c}\"")).collect::<Vec<_>>().join(", ");
    format!(
        r#"plt.rcParams.update({{"font.size": {size}, "font.family": "{font}", "axes.titleweight": "bold",
                     "axes.labelcolor": "{ink}", "xtick.color": "{ink}", "ytick.color": "{ink}", "text.color": "{ink}"}})
for _st in STYLES:
    _st["colors"] = [{colors}]
"#
    )
}

fn shading<R: Rng>(rng: &mut R) -> String {
    let cmap = GRADIENTS.choose(rng).expect("gradients");
    let alpha = frac(rng, 0.1, 0.25);
    format!(
        r#"for _ax in AXES:
    if _ax.name != "rectilinear":
        continue
    _xlo, _xhi = _ax.get_xlim()
    _ylo, _yhi = _ax.get_ylim()
    for _line in list(_ax.get_lines()):
        try:
            _xd = np.asarray(_line.get_xdata(), dtype=float)
            _yd = np.asarray(_line.get_ydata(), dtype=float)
        except (TypeError, ValueError):
            continue
        if _xd.size > 1:
            _ax.fill_between(_xd, _yd, _ylo, color=_line.get_color(), alpha={alpha})
    _ax.imshow(np.linspace(0, 1, 256).reshape(-1, 1), cmap="{cmap}", aspect="auto",
               extent=(_xlo, _xhi, _ylo, _yhi), alpha=0.15, zorder=-1)
    _ax.set_xlim(_xlo, _xhi)
    _ax.set_ylim(_ylo, _yhi)
"#
    )
}

fn borders<R: Rng>(rng: &mut R) -> String {
    let sides = if rng.random_bool(0.5) { r#"("top", "right")"# } else { r#"("top", "right", "left", "bottom")"# };
    format!(
        r#"for _ax in fig.axes:
    if _ax.name != "rectilinear":
        continue
    for _side in {sides}:
        _ax.spines[_side].set_visible(False)
    _ax.tick_params(axis="both", length=0)
"#
    )
}

fn zoom<R: Rng>(rng: &mut R) -> String {
    let types = ZOOMABLE.iter().map(|t| format!("\"{t}\"")).collect::<Vec<_>>().join(", ");
    let corner = [(0.58, 0.58), (0.06, 0.58), (0.58, 0.08), (0.06, 0.08)].choose(rng).copied().expect("corners");
    let start = frac(rng, 0.2, 0.5);
    format!(
        r#"for _i, (_sp, _st) in enumerate(zip(SUBPLOTS, STYLES)):
    if _sp["type"] not in ({types},):
        continue
    _ax = AXES[_i]
    _xlo, _xhi = _ax.get_xlim()
    _ins = _ax.inset_axes([{cx}, {cy}, 0.36, 0.36])
    DRAW[_sp["type"]](fig, _ins, dict(_sp, title="", x_label="", y_label="", annotations=[]), _st)
    if _ins.get_legend() is not None:
        _ins.get_legend().remove()
    _ins.set_xlim(_xlo + {start} * (_xhi - _xlo), _xlo + {end} * (_xhi - _xlo))
    _ins.tick_params(labelsize="x-small")
    _ax.indicate_inset_zoom(_ins, edgecolor="0.35")
    break
"#,
        cx = corner.0,
        cy = corner.1,
        end = start + 0.3
    )
}

/// The title literal a stub overall-title edit would add.
pub fn overall_title_text<R: Rng>(source: &str, rng: &mut R) -> String {
    let theme = header_value(source, "theme").and_then(|t| Theme::from_str(t).ok()).unwrap_or(Theme::Statistics);
    let v = theme.vocabulary();
    let (measure, _) = v.measures.choose(rng).expect("measures");
    let pattern = [
        "{theme} at a Glance: {measure} and Related Indicators",
        "Perspectives on {measure} in {theme}",
        "{theme} Overview: Trends in {measure}",
        "A Multi-View Study of {measure} in {theme}",
    ]
    .choose(rng)
    .expect("patterns");
    pattern.replace("{theme}", theme.name()).replace("{measure}", measure)
}

fn overall_title<R: Rng>(source: &str, rng: &mut R) -> String {
    let title = overall_title_text(source, rng);
    format!("fig.suptitle({}, fontweight=\"bold\")\n", serde_json::to_string(&title).expect("encodes"))
}

fn extras<R: Rng>(rng: &mut R) -> Vec<String> {
    let pool: [&dyn Fn(&mut R) -> String; 5] = [
        &|r: &mut R| {
            format!(
                "for _ax in AXES:\n    _ax.set_facecolor(\"{}\")\n",
                ["#f7f7f7", "#fbfaf5", "#f4f6f8"].choose(r).expect("bg")
            )
        },
        &|_: &mut R| "for _ax in AXES:\n    _ax.grid(True, linestyle=\":\", alpha=0.4)\n".to_string(),
        &|r: &mut R| {
            format!(
                "for _ax in AXES:\n    for _line in _ax.get_lines():\n        _line.set_linewidth({})\n",
                frac(r, 1.5, 3.0)
            )
        },
        &|r: &mut R| {
            format!("for _ax in AXES:\n    for _c in _ax.collections:\n        _c.set_alpha({})\n", frac(r, 0.6, 0.9))
        },
        &|r: &mut R| {
            format!(
                "for _ax in AXES:\n    for _line in _ax.get_lines()[:1]:\n        _line.set_color(\"{}\")\n",
                ACCENTS.choose(r).expect("accents")
            )
        },
    ];
    let n = rng.random_range(0..=3);
    let mut idx: Vec<usize> = (0..pool.len()).collect();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let k = rng.random_range(0..idx.len());
        out.push(pool[idx.remove(k)](rng));
    }
    out
}
