//! Training-set export over a hand-built store.

use std::collections::BTreeMap;

use chartforge_core::model::{ChartType, Layout, Theme};
use chartforge_core::qa::{QaBatch, QaKind, QaRecord};
use chartforge_core::store::{
    export_training_set, EntryPaths, ExportFormat, ExportRecord, ExportSpec, InstructionRecord, ManifestEntry, Stage,
    StageStatus, Store,
};

fn qa(figure: &str, kind: QaKind, i: usize) -> QaRecord {
    QaRecord {
        figure_id: figure.into(),
        qa_type: kind,
        question: format!("{} question {i}", kind.as_str()),
        answer: format!("{i}"),
        rationale: (kind == QaKind::Reasoning).then(|| format!("because {i}")),
        confidence: 5,
        category: "numerical".into(),
        spec_ref: None,
    }
}

/// Two figures past QA: `f1` with 3 descriptive + 2 reasoning, `f2` with
/// 2 descriptive + 1 reasoning. A third figure was dropped at the filter.
fn build(root: &std::path::Path) -> Store {
    let mut store = Store::open(root).unwrap();
    let mut entries = Vec::new();
    for (id, theme) in [("f1", Theme::Physics), ("f2", Theme::Economics), ("f3", Theme::Biology)] {
        entries.push(ManifestEntry {
            figure_id: id.into(),
            stage_status: BTreeMap::new(),
            paths: EntryPaths::default(),
            theme,
            layout: Layout::SINGLE,
            cell_types: vec![ChartType::Line],
            created_at: 0,
            seeds: BTreeMap::new(),
        });
    }
    store.append_entries(entries).unwrap();
    let mut updates = Vec::new();
    for (id, n_desc, n_reason) in [("f1", 3, 2), ("f2", 2, 1), ("f3", 0, 0)] {
        let image = format!("images/{id}.png");
        image::RgbImage::from_pixel(8, 8, image::Rgb([1, 2, 3])).save(store.path(&image)).unwrap();
        let paths = EntryPaths { image: Some(image), ..EntryPaths::default() };
        updates.push((id.to_string(), Stage::Generate, StageStatus::Done, paths));
        updates.push((id.to_string(), Stage::Diversify, StageStatus::Done, EntryPaths::default()));
        if id == "f3" {
            let drop = StageStatus::Dropped { cause: "below_mean".into() };
            updates.push((id.to_string(), Stage::Filter, drop, EntryPaths::default()));
            continue;
        }
        updates.push((id.to_string(), Stage::Filter, StageStatus::Done, EntryPaths::default()));
        let mut candidates: Vec<QaRecord> = (0..n_desc).map(|i| qa(id, QaKind::Descriptive, i)).collect();
        candidates.extend((0..n_reason).map(|i| qa(id, QaKind::Reasoning, i)));
        let rel = format!("qa/{id}.json");
        store.write_json(&rel, &QaBatch::new(id, candidates)).unwrap();
        updates.push((
            id.to_string(),
            Stage::Qa,
            StageStatus::Done,
            EntryPaths { qa: Some(rel), ..EntryPaths::default() },
        ));
    }
    store.record_stages(updates).unwrap();
    assert!(store.integrity_problems().unwrap().is_empty(), "{:?}", store.integrity_problems());
    store
}

fn read_lines<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Vec<T> {
    std::fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn one_to_one_takes_the_largest_balanced_set() {
    let dir = tempfile::tempdir().unwrap();
    let store = build(&dir.path().join("store"));
    let out = dir.path().join("export");
    let stats = export_training_set(&store, &out, &ExportSpec::default()).unwrap();
    // 5 descriptive, 3 reasoning available.
    assert_eq!((stats.descriptive, stats.reasoning), (3, 3));
    assert!(stats.warnings.is_empty(), "{:?}", stats.warnings);
    let records: Vec<ExportRecord> = read_lines(&out.join("qa.jsonl"));
    assert_eq!(records.len(), 6);
    let mut ids: Vec<&str> = records.iter().map(|r| r.item_id.as_str()).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 6, "item ids must be unique");
    for r in &records {
        assert!(out.join(&r.image_path).exists(), "{}", r.image_path);
        assert_ne!(r.figure_id, "f3");
    }
    assert_eq!(stats.per_theme.values().sum::<usize>(), 6);
}

#[test]
fn descriptive_only_and_shortfall() {
    let dir = tempfile::tempdir().unwrap();
    let store = build(&dir.path().join("store"));
    let only =
        export_training_set(&store, &dir.path().join("a"), &ExportSpec { ratio: (5, 0), ..ExportSpec::default() })
            .unwrap();
    assert_eq!((only.descriptive, only.reasoning), (5, 0));

    let spec = ExportSpec { ratio: (1, 1), size: Some(8), ..ExportSpec::default() };
    let short = export_training_set(&store, &dir.path().join("b"), &spec).unwrap();
    assert_eq!(short.requested, (4, 4));
    assert_eq!((short.descriptive, short.reasoning), (4, 3));
    assert_eq!(short.warnings.len(), 1, "{:?}", short.warnings);

    assert!(export_training_set(&store, &dir.path().join("c"), &ExportSpec { ratio: (0, 0), ..ExportSpec::default() })
        .is_err());
}

#[test]
fn instruction_format_and_seeded_sampling() {
    let dir = tempfile::tempdir().unwrap();
    let store = build(&dir.path().join("store"));
    let spec = ExportSpec { ratio: (1, 1), size: Some(4), format: ExportFormat::Instruction, seed: 11 };
    export_training_set(&store, &dir.path().join("x"), &spec).unwrap();
    export_training_set(&store, &dir.path().join("y"), &spec).unwrap();
    let x = std::fs::read(dir.path().join("x/qa.jsonl")).unwrap();
    assert_eq!(x, std::fs::read(dir.path().join("y/qa.jsonl")).unwrap());
    let records: Vec<InstructionRecord> = read_lines(&dir.path().join("x/qa.jsonl"));
    assert_eq!(records.len(), 4);
    for r in records.iter().filter(|r| r.item_id.contains("-r")) {
        assert!(r.target.starts_with("because ") && r.target.contains("\nFinal answer: "), "{}", r.target);
    }
}
