//! Expansion of a figure spec into a standalone plotting program, and the
//! small set of textual edits later stages perform on such programs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::model::{ChartType, FigureSpec, Subplot};
use crate::util::{json_digest, sha256_hex};

pub const DATA_BEGIN: &str = "# @data-begin";
pub const DATA_END: &str = "# @data-end";
pub const STYLE_HOOK: &str = "# @style";
pub const DECORATE_HOOK: &str = "# @decorate";
pub const OUTPUT_NAME: &str = "figure.png";

const CHART_SOURCE: &str = include_str!("charts.py");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlotProgram {
    pub figure_id: String,
    pub source: String,
    pub spec_digest: String,
    /// Diversification strategy ids applied so far, in order.
    #[serde(default)]
    pub transforms: Vec<String>,
}

impl PlotProgram {
    pub fn digest(&self) -> String {
        sha256_hex(&self.source)
    }

    pub fn with_source(&self, source: String, transform: Option<&str>) -> Self {
        let mut transforms = self.transforms.clone();
        transforms.extend(transform.map(str::to_string));
        Self { figure_id: self.figure_id.clone(), source, spec_digest: self.spec_digest.clone(), transforms }
    }
}

/// Chart-function sections of the template library, keyed by section name.
fn sections() -> &'static BTreeMap<&'static str, &'static str> {
    static SECTIONS: OnceLock<BTreeMap<&'static str, &'static str>> = OnceLock::new();
    SECTIONS.get_or_init(|| {
        let mut out = BTreeMap::new();
        let mut rest = CHART_SOURCE;
        while let Some(start) = rest.find("# @@ ") {
            let after = &rest[start + 5..];
            let name_end = after.find('\n').expect("section header line");
            let name = after[..name_end].trim();
            let body_start = name_end + 1;
            let body_end = after[body_start..].find("# @@ ").map(|i| body_start + i).unwrap_or(after.len());
            out.insert(name, after[body_start..body_end].trim_end());
            rest = &after[body_end..];
        }
        out
    })
}

/// Name of the Python drawing function for a chart type.
pub fn draw_function(ty: ChartType) -> String {
    let name = match ty.as_str() {
        "3d" => "3d".to_string(),
        other => other.replace('+', "_"),
    };
    format!("draw_{name}")
}

/// Source of the chart function for `ty`, if the library defines one.
pub fn chart_function_source(ty: ChartType) -> Option<&'static str> {
    sections().get(ty.as_str()).copied()
}

/// Python literal for a JSON value.
pub fn py_literal(v: &Value) -> String {
    let mut out = String::new();
    write_py(v, &mut out);
    out
}

fn write_py(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("None"),
        Value::Bool(b) => out.push_str(if *b { "True" } else { "False" }),
        Value::Number(n) => out.push_str(&n.to_string()),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string encodes")),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_py(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&serde_json::to_string(k).expect("key encodes"));
                out.push_str(": ");
                write_py(item, out);
            }
            out.push('}');
        }
    }
}

fn subplot_data(sp: &Subplot) -> String {
    let s = &sp.spec;
    let head = json!({
        "cell": sp.cell,
        "type": s.chart_type.as_str(),
        "title": s.title,
        "x_label": s.x_label,
        "y_label": s.y_label,
        "annotations": serde_json::to_value(&s.annotations).expect("annotations encode"),
    });
    let mut text = py_literal(&head);
    text.pop();
    text.push_str(", \"series\": [\n");
    for series in &s.series {
        let v = serde_json::to_value(series).expect("series encodes");
        let _ = writeln!(text, "        {},", py_literal(&v));
    }
    text.push_str("    ]}");
    text
}

pub fn emit_plot_program(spec: &FigureSpec) -> PlotProgram {
    let mut subplots: Vec<&Subplot> = spec.subplots.iter().collect();
    subplots.sort_by_key(|s| s.cell);
    let mut types: Vec<ChartType> = subplots.iter().map(|s| s.spec.chart_type).collect();
    types.sort();
    types.dedup();

    let mut src = String::new();
    let theme = spec.theme().map(|t| t.name()).unwrap_or("");
    let _ = writeln!(src, "# chartforge plot program");
    let _ = writeln!(src, "# figure: {}", spec.figure_id);
    let _ = writeln!(src, "# theme: {theme}");
    let _ = writeln!(src, "# layout: {}", spec.layout);
    src.push_str(
        "import numpy as np\nimport matplotlib\n\nmatplotlib.use(\"Agg\")\nimport matplotlib.pyplot as plt\n\n",
    );
    let _ = writeln!(src, "FIGSIZE = ({}, {})", fmt_inches(spec.figsize.0), fmt_inches(spec.figsize.1));
    let _ = writeln!(src, "DPI = {}", spec.dpi);
    let _ = writeln!(src, "OUTPUT = \"{OUTPUT_NAME}\"");
    let _ = writeln!(src, "ROWS, COLS = {}, {}", spec.layout.rows, spec.layout.cols);
    src.push('\n');

    src.push_str(DATA_BEGIN);
    src.push_str("\nSUBPLOTS = [\n");
    for sp in &subplots {
        let _ = writeln!(src, "    {},", subplot_data(sp));
    }
    src.push_str("]\n");
    src.push_str(DATA_END);
    src.push_str("\n\nSTYLES = [\n");
    for sp in &subplots {
        let v = serde_json::to_value(&sp.spec.style).expect("style encodes");
        let _ = writeln!(src, "    {},", py_literal(&v));
    }
    src.push_str("]\n\n");

    src.push_str(sections()["helpers"]);
    src.push_str("\n\n");
    for ty in &types {
        src.push('\n');
        src.push_str(chart_function_source(*ty).expect("every chart type has a chart function"));
        src.push_str("\n\n");
    }
    src.push_str("\nDRAW = {\n");
    for ty in &types {
        let _ = writeln!(src, "    \"{}\": {},", ty.as_str(), draw_function(*ty));
    }
    src.push_str("}\nPROJECTION = {");
    let projections: Vec<String> =
        types.iter().filter_map(|t| t.projection().map(|p| format!("\"{}\": \"{p}\"", t.as_str()))).collect();
    src.push_str(&projections.join(", "));
    src.push_str("}\n\n");

    src.push_str(STYLE_HOOK);
    src.push_str("\n\nfig = plt.figure(figsize=FIGSIZE, dpi=DPI)\nAXES = []\n");
    src.push_str("for sp, st in zip(SUBPLOTS, STYLES):\n");
    src.push_str("    ax = fig.add_subplot(ROWS, COLS, sp[\"cell\"] + 1, projection=PROJECTION.get(sp[\"type\"]))\n");
    src.push_str("    DRAW[sp[\"type\"]](fig, ax, sp, st)\n");
    src.push_str("    AXES.append(ax)\n");
    if let Some(title) = &spec.overall_title {
        let _ =
            writeln!(src, "fig.suptitle(tx({}), fontsize=\"x-large\")", serde_json::to_string(title).expect("encodes"));
    }
    src.push('\n');
    src.push_str(DECORATE_HOOK);
    src.push_str("\n\nfig.tight_layout()\n");
    src.push_str("fig.savefig(OUTPUT, dpi=DPI, metadata={\"Software\": None})\n");

    PlotProgram {
        figure_id: spec.figure_id.clone(),
        source: src,
        spec_digest: json_digest(spec),
        transforms: Vec::new(),
    }
}

fn fmt_inches(v: f64) -> String {
    let s = format!("{v}");
    if s.contains('.') {
        s
    } else {
        format!("{s}.0")
    }
}

/// The verbatim data block, markers included.
pub fn data_block(source: &str) -> Option<&str> {
    let start = source.find(DATA_BEGIN)?;
    let end = source[start..].find(DATA_END)? + start + DATA_END.len();
    Some(&source[start..end])
}

pub fn data_preserved(before: &str, after: &str) -> bool {
    matches!((data_block(before), data_block(after)), (Some(a), Some(b)) if a == b)
}

/// Reads the `FIGSIZE = (w, h)` and `DPI = n` assignments.
pub fn read_geometry(source: &str) -> Option<((f64, f64), u32)> {
    let mut figsize = None;
    let mut dpi = None;
    for line in source.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("FIGSIZE = (") {
            let inner = rest.strip_suffix(')')?;
            let mut parts = inner.split(',').map(|p| p.trim().parse::<f64>());
            if let (Some(Ok(w)), Some(Ok(h))) = (parts.next(), parts.next()) {
                figsize = Some((w, h));
            }
        } else if let Some(rest) = line.strip_prefix("DPI = ") {
            dpi = rest.trim().parse::<u32>().ok();
        }
    }
    Some((figsize?, dpi?))
}

/// Rewrites the geometry assignments, leaving every other line untouched.
pub fn set_geometry(source: &str, figsize: (f64, f64), dpi: u32) -> String {
    let mut out = String::with_capacity(source.len());
    for line in source.split_inclusive('\n') {
        let trimmed = line.trim_start();
        if trimmed.starts_with("FIGSIZE = (") {
            let _ = writeln!(out, "FIGSIZE = ({}, {})", fmt_inches(figsize.0), fmt_inches(figsize.1));
        } else if trimmed.starts_with("DPI = ") {
            let _ = writeln!(out, "DPI = {dpi}");
        } else {
            out.push_str(line);
        }
    }
    out
}

/// Inserts `code` right after the hook marker line. Returns `None` if the
/// program has no such hook.
pub fn insert_at_hook(source: &str, hook: &str, code: &str) -> Option<String> {
    let at = source.find(hook)?;
    let line_end = source[at..].find('\n').map(|i| at + i + 1).unwrap_or(source.len());
    let mut out = String::with_capacity(source.len() + code.len() + 1);
    out.push_str(&source[..line_end]);
    out.push_str(code);
    if !code.ends_with('\n') {
        out.push('\n');
    }
    out.push_str(&source[line_end..]);
    Some(out)
}

/// The `# theme:` header value, if present.
pub fn header_value<'a>(source: &'a str, key: &str) -> Option<&'a str> {
    let prefix = format!("# {key}: ");
    source.lines().find_map(|l| l.strip_prefix(prefix.as_str())).map(str::trim)
}
