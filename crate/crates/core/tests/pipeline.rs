//! Stage orchestration against a real store and the sandboxed renderer, in
//! stub mode with small corpora.

use chartforge_core::pipeline::{manifest_counts, BackendChoice, Pipeline, RunConfig};
use chartforge_core::store::{Stage, Store};
use chartforge_core::PipelineError;

fn config(n_single: usize, n_multi: usize) -> RunConfig {
    RunConfig { seed: 5, n_single, n_multi, n_desc: 4, n_reason: 4, ..RunConfig::default() }
}

fn open(root: &std::path::Path, cfg: RunConfig) -> (Pipeline, Store) {
    let pipeline = Pipeline::new(cfg, root).unwrap();
    let store = Store::open(root).unwrap();
    (pipeline, store)
}

#[test]
fn filter_before_diversify_names_the_gap() {
    let dir = tempfile::tempdir().unwrap();
    let (p, mut store) = open(dir.path(), config(0, 0));
    let err = p.run_stage(&mut store, Stage::Filter).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("filter") && msg.contains("diversify"), "{msg}");
}

#[test]
fn empty_run_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let (p, mut store) = open(dir.path(), config(0, 0));
    let summary = p.run(&mut store);
    assert!(summary.error.is_none(), "{:?}", summary.error);
    assert_eq!(summary.counts.figures, 0);
}

#[test]
fn live_backend_without_key_fails_before_touching_disk() {
    if std::env::var_os(chartforge_core::gateway::API_KEY_ENV).is_some() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("store");
    let cfg = RunConfig { backend: BackendChoice::Live, ..config(1, 0) };
    let err = Pipeline::new(cfg, &root).err().expect("config error");
    assert!(matches!(err, PipelineError::Config(_)), "{err}");
    assert!(!root.exists());
}

#[test]
fn generate_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let (p, mut store) = open(dir.path(), config(3, 0));
    let first = p.run_stage(&mut store, Stage::Generate).unwrap();
    assert_eq!((first.attempted, first.skipped), (3, 0));
    let digest = store.manifest().content_digest();
    let requests = p.gateway().requests_made();
    let second = p.run_stage(&mut store, Stage::Generate).unwrap();
    assert_eq!((second.attempted, second.skipped), (0, 3));
    assert_eq!(store.manifest().content_digest(), digest);
    assert_eq!(p.gateway().requests_made(), requests, "no-op run made gateway calls");
}

#[test]
fn request_budget_stops_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig { max_requests: Some(10), ..config(50, 0) };
    let (p, mut store) = open(dir.path(), cfg);
    let err = p.run_stage(&mut store, Stage::Generate).unwrap_err();
    assert!(err.is_budget(), "{err}");
    assert_eq!(p.gateway().requests_made(), 10);
    let kept = store.manifest().len();
    assert!(kept > 0 && kept <= 10, "{kept} figures persisted");
    assert!(store.integrity_problems().unwrap().is_empty());
    // State survives a reopen.
    drop(store);
    let reopened = Store::open_read_only(dir.path()).unwrap();
    assert_eq!(reopened.manifest().len(), kept);
}

#[test]
fn interrupted_run_resumes_to_the_same_manifest() {
    let straight = tempfile::tempdir().unwrap();
    let (p, mut store) = open(straight.path(), config(4, 2));
    let full = p.run(&mut store);
    assert!(full.error.is_none(), "{:?}", full.error);

    // Summary counts agree with a recount from the manifest.
    assert_eq!(full.counts, manifest_counts(&store).unwrap());
    assert!(store.integrity_problems().unwrap().is_empty());
    let total_requests = full.requests_made;

    let resumed = tempfile::tempdir().unwrap();
    let mut cap = total_requests / 2;
    let mut interruptions = 0;
    loop {
        let cfg = RunConfig { max_requests: Some(cap), ..config(4, 2) };
        let (p, mut store) = open(resumed.path(), cfg);
        let summary = p.run(&mut store);
        if !summary.budget_exhausted {
            assert!(summary.error.is_none(), "{:?}", summary.error);
            break;
        }
        assert!(store.integrity_problems().unwrap().is_empty());
        interruptions += 1;
        cap = total_requests;
    }
    assert_eq!(interruptions, 1);
    let store_b = Store::open_read_only(resumed.path()).unwrap();
    assert_eq!(store.manifest().content_digest(), store_b.manifest().content_digest());
    for e in store.manifest().entries() {
        if let Some(img) = &e.paths.image {
            assert_eq!(std::fs::read(store.path(img)).unwrap(), std::fs::read(store_b.path(img)).unwrap(), "{img}");
        }
    }
}

#[test]
fn stages_refuse_a_locked_store() {
    let dir = tempfile::tempdir().unwrap();
    let _held = Store::open(dir.path()).unwrap();
    assert!(Store::open(dir.path()).is_err());
}
