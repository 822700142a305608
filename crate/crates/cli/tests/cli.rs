use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn chartforge(store: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chartforge"))
        .arg("--store")
        .arg(store)
        .args(args)
        .env_remove("CHARTFORGE_API_KEY")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}\nstderr: {}", String::from_utf8_lossy(&out.stdout), stderr(out))
    })
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn help_lists_every_command() {
    let out = Command::new(env!("CARGO_BIN_EXE_chartforge")).arg("--help").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in ["generate", "compose", "diversify", "filter", "qa", "metrics", "eval", "report", "pipeline"] {
        assert!(text.contains(cmd), "{cmd} missing from help:\n{text}");
    }
}

#[test]
fn empty_pipeline_exits_zero_and_config_file_is_overridable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 9\nn_single = 0\nn_multi = 0\n").unwrap();
    let store = dir.path().join("store");
    let out = chartforge(&store, &["--config", cfg.to_str().unwrap(), "pipeline"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let summary = json(&out);
    assert_eq!(summary["seed"], 9);
    assert_eq!(summary["counts"]["figures"], 0);

    let out = chartforge(&store, &["--config", cfg.to_str().unwrap(), "--seed", "4", "pipeline"]);
    assert_eq!(json(&out)["seed"], 4);
}

#[test]
fn live_backend_without_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let out = chartforge(&store, &["--backend", "live", "generate", "--n-single", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("CHARTFORGE_API_KEY"), "{}", stderr(&out));
    assert!(!store.exists(), "store created before the config check");
}

#[test]
fn missing_dependency_stage_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = chartforge(dir.path(), &["filter"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("depends on diversify"), "{}", stderr(&out));
}

#[test]
fn budget_exhaustion_exits_3_and_the_store_stays_usable() {
    let dir = tempfile::tempdir().unwrap();
    let out = chartforge(dir.path(), &["--max-requests", "2", "generate", "--n-single", "5"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));

    let report = chartforge(dir.path(), &["report"]);
    assert!(report.status.success(), "{}", stderr(&report));
    let total = json(&report)["distribution"]["total"].as_u64().unwrap();
    assert!((1..=2).contains(&total), "{total}");

    let metrics = chartforge(dir.path(), &["metrics", "--per-image"]);
    assert!(metrics.status.success(), "{}", stderr(&metrics));
    let m = json(&metrics);
    assert!(m["avg_entropy"].as_f64().unwrap() > 0.0);
    assert_eq!(m["per_image_entropy"].as_object().unwrap().len() as u64, total);
}

#[test]
fn report_on_empty_store_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = chartforge(dir.path(), &["report"]);
    assert!(!out.status.success());
}

#[test]
fn metrics_on_image_directories() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (d, shade) in [(&a, 40u8), (&b, 200u8)] {
        std::fs::create_dir_all(d).unwrap();
        for i in 0..3u8 {
            let img = image_png(shade.wrapping_add(i * 10));
            std::fs::write(d.join(format!("{i}.png")), img).unwrap();
        }
    }
    let out = chartforge(
        &dir.path().join("unused"),
        &["metrics", "--images", a.to_str().unwrap(), "--reference", b.to_str().unwrap()],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let m = json(&out);
    assert!(m["fid"].as_f64().unwrap() > 0.0);
    assert!(m.get("per_image_entropy").is_none());
}

/// Checkerboard of two gray levels: one bit of entropy.
fn image_png(level: u8) -> Vec<u8> {
    let img = image::RgbImage::from_fn(16, 16, |x, y| {
        let v = if (x + y) % 2 == 0 { level } else { 255 - level };
        image::Rgb([v, v, v])
    });
    let mut bytes = std::io::Cursor::new(Vec::new());
    img.write_to(&mut bytes, image::ImageFormat::Png).unwrap();
    bytes.into_inner()
}

#[test]
fn eval_scores_and_writes_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth.jsonl");
    let preds = dir.path().join("preds.jsonl");
    std::fs::write(
        &truth,
        [
            r#"{"item_id":"a","qa_type":"descriptive","question":"How many bars?","answer":"12"}"#,
            r#"{"item_id":"b","qa_type":"descriptive","question":"Title?","answer":"Crop Yield"}"#,
            r#"{"item_id":"c","qa_type":"reasoning","question":"Is A above B?","answer":"yes"}"#,
            r#"{"item_id":"d","qa_type":"reasoning","question":"Peak?","answer":"40"}"#,
        ]
        .join("\n"),
    )
    .unwrap();
    std::fs::write(
        &preds,
        [
            r#"{"item_id":"a","prediction":"There are 12 bars."}"#,
            r#"{"item_id":"b","prediction":"Rainfall"}"#,
            r#"{"item_id":"c","prediction":"Yes, clearly."}"#,
            r#"{"item_id":"d","prediction":"About 41.5"}"#,
        ]
        .join("\n"),
    )
    .unwrap();
    let out_dir = dir.path().join("eval");
    let out = chartforge(
        &dir.path().join("store"),
        &[
            "eval",
            "--predictions",
            preds.to_str().unwrap(),
            "--dataset",
            truth.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report = json(&out);
    assert_eq!(report["descriptive"], 50.0);
    assert_eq!(report["reasoning"], 100.0);
    assert_eq!(report["average"], 75.0);
    let verdicts = std::fs::read_to_string(out_dir.join("verdicts.jsonl")).unwrap();
    assert_eq!(verdicts.lines().count(), 4);
}
