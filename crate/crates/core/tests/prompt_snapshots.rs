//! Golden prompts. Every template is rendered with placeholder slots and the
//! generation prompts once more from real tasks; any wording change shows up
//! as a diff against `tests/snapshots/`. Regenerate with `UPDATE_SNAPSHOTS=1`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use chartforge_core::gateway::{render_prompt, TemplateId};
use chartforge_core::generator::{joint_request, single_plot_request, subplot_request, FigurePlan, GenerationMode};
use chartforge_core::model::{ChartType, GenerationTask, Layout, Theme, Trend};

fn snapshot_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("snapshots")
}

fn compare(name: &str, actual: &str) -> Option<String> {
    let path = snapshot_dir().join(format!("{name}.txt"));
    if std::env::var_os("UPDATE_SNAPSHOTS").is_some() {
        std::fs::create_dir_all(snapshot_dir()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return None;
    }
    match std::fs::read_to_string(&path) {
        Ok(expected) if expected == actual => None,
        Ok(_) => Some(format!("{name}: prompt differs from {}", path.display())),
        Err(_) => Some(format!("{name}: no snapshot at {}", path.display())),
    }
}

#[test]
fn templates_match_snapshots() {
    let mut failures = Vec::new();
    for t in TemplateId::ALL {
        let slots: BTreeMap<String, String> =
            t.slots().into_iter().map(|s| (s.to_string(), format!("<{s}>"))).collect();
        let text = render_prompt(t, &slots).unwrap();
        failures.extend(compare(t.as_str(), &text));
    }

    let task = GenerationTask {
        theme: Theme::Astronomy,
        chart_type: ChartType::Histogram,
        trend: Trend::Increasing,
        element_count: 8,
        seed: 42,
    };
    failures.extend(compare("filled_single_plot_gen", &single_plot_request(&task).prompt().unwrap()));
    let plan = FigurePlan {
        layout: Layout { rows: 1, cols: 2 },
        cell_types: vec![ChartType::Line, ChartType::Pie],
        theme: Theme::Economics,
        seed: 7,
        mode: GenerationMode::Conditional,
    };
    failures.extend(compare("filled_subplot_gen", &subplot_request(&plan, &[], 0).prompt().unwrap()));
    failures.extend(compare("filled_joint_figure_gen", &joint_request(&plan).prompt().unwrap()));
    assert!(failures.is_empty(), "{}\nrerun with UPDATE_SNAPSHOTS=1 if the change is intended", failures.join("\n"));
}
