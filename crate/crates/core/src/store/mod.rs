//! Append-only dataset store: the figure manifest, per-stage JSONL logs,
//! artifacts on disk, corpus reports and training exports.
//!
//! Layout under the root:
//! `manifest.jsonl`, `ratings.jsonl`, `filter_decisions.jsonl`,
//! `diversify_log.jsonl`, `images/`, `programs/`, `specs/`, `qa/`, `audit/`.

mod export;
mod manifest;
mod report;

use std::fs::{self, File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

pub use export::{export_training_set, ExportFormat, ExportRecord, ExportSpec, ExportStats, InstructionRecord};
pub use manifest::{EntryPaths, Manifest, ManifestEntry, ManifestEvent, Stage, StageStatus};
pub use report::{distribution_report, DistributionReport, RetentionLog};

use crate::error::StoreError;
use crate::qa::QaBatch;

pub const MANIFEST: &str = "manifest.jsonl";
pub const RATINGS: &str = "ratings.jsonl";
pub const FILTER_DECISIONS: &str = "filter_decisions.jsonl";
pub const DIVERSIFY_LOG: &str = "diversify_log.jsonl";
pub const LOCK_FILE: &str = ".lock";
pub const SUBDIRS: [&str; 6] = ["images", "images/undiversified", "programs", "specs", "qa", "audit"];

/// Holds `<root>/.lock` (containing the owner pid) until dropped.
#[derive(Debug)]
pub struct StoreLock {
    path: PathBuf,
}

fn pid_alive(pid: u32) -> bool {
    if cfg!(target_os = "linux") {
        Path::new(&format!("/proc/{pid}")).exists()
    } else {
        true
    }
}

impl StoreLock {
    pub fn acquire(root: &Path) -> Result<Self, StoreError> {
        let path = root.join(LOCK_FILE);
        for _ in 0..2 {
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(mut f) => {
                    writeln!(f, "{}", std::process::id()).map_err(|e| StoreError::io(&path, e))?;
                    return Ok(Self { path });
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    let owner = fs::read_to_string(&path).ok().and_then(|s| s.trim().parse::<u32>().ok());
                    match owner {
                        Some(pid) if pid_alive(pid) => return Err(StoreError::Locked(root.to_path_buf())),
                        _ => {
                            log::warn!("removing stale lock {} (owner {owner:?})", path.display());
                            fs::remove_file(&path).map_err(|e| StoreError::io(&path, e))?;
                        }
                    }
                }
                Err(e) => return Err(StoreError::io(&path, e)),
            }
        }
        Err(StoreError::Locked(root.to_path_buf()))
    }
}

impl Drop for StoreLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Reads a JSONL file. A final line without a trailing newline that fails to
/// parse is a torn write and is skipped; any other bad line is corruption.
/// Returns the records and the byte length of the intact prefix.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<(Vec<T>, u64), StoreError> {
    let mut text = String::new();
    match File::open(path) {
        Ok(mut f) => f.read_to_string(&mut text).map_err(|e| StoreError::io(path, e))?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((Vec::new(), 0)),
        Err(e) => return Err(StoreError::io(path, e)),
    };
    let mut out = Vec::new();
    let mut offset = 0u64;
    let mut rest = text.as_str();
    let mut lineno = 0;
    while !rest.is_empty() {
        lineno += 1;
        let (line, terminated) = match rest.find('\n') {
            Some(i) => (&rest[..i], true),
            None => (rest, false),
        };
        rest = if terminated { &rest[line.len() + 1..] } else { "" };
        if line.trim().is_empty() {
            offset += line.len() as u64 + terminated as u64;
            continue;
        }
        match serde_json::from_str(line) {
            Ok(v) => {
                out.push(v);
                offset += line.len() as u64 + terminated as u64;
            }
            Err(e) if !terminated => {
                log::warn!("{}:{lineno}: skipping torn record ({e})", path.display());
            }
            Err(e) => {
                return Err(StoreError::Corrupt { path: path.to_path_buf(), reason: format!("line {lineno}: {e}") })
            }
        }
    }
    Ok((out, offset))
}

/// Appends records, one JSON object per line, and syncs the batch.
pub fn append_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), StoreError> {
    if records.is_empty() {
        return Ok(());
    }
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r)
            .map_err(|e| StoreError::Corrupt { path: path.to_path_buf(), reason: e.to_string() })?;
        buf.push(b'\n');
    }
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| StoreError::io(path, e))?;
    f.write_all(&buf).map_err(|e| StoreError::io(path, e))?;
    f.sync_data().map_err(|e| StoreError::io(path, e))
}

/// Cuts a torn tail so the next append starts on a fresh line.
fn truncate_to(path: &Path, len: u64) -> Result<(), StoreError> {
    let Ok(meta) = fs::metadata(path) else { return Ok(()) };
    if meta.len() > len {
        let f = OpenOptions::new().write(true).open(path).map_err(|e| StoreError::io(path, e))?;
        f.set_len(len).map_err(|e| StoreError::io(path, e))?;
        log::warn!("truncated {} to {len} bytes", path.display());
    }
    Ok(())
}

/// A store opened for reading, or for writing when it holds the lock.
#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    manifest: Manifest,
    lock: Option<StoreLock>,
}

impl Store {
    /// Opens (creating if needed) a store for writing, taking the lock.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| StoreError::io(&root, e))?;
        for d in SUBDIRS {
            let p = root.join(d);
            fs::create_dir_all(&p).map_err(|e| StoreError::io(&p, e))?;
        }
        let lock = StoreLock::acquire(&root)?;
        for name in [MANIFEST, RATINGS, FILTER_DECISIONS, DIVERSIFY_LOG] {
            let path = root.join(name);
            let (_, good): (Vec<serde_json::Value>, u64) = read_jsonl(&path)?;
            truncate_to(&path, good)?;
        }
        let manifest = Self::load_manifest(&root)?;
        Ok(Self { root, manifest, lock: Some(lock) })
    }

    /// Opens an existing store without the lock; writes are refused.
    pub fn open_read_only(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        let manifest = Self::load_manifest(&root)?;
        Ok(Self { root, manifest, lock: None })
    }

    pub fn load_manifest(root: &Path) -> Result<Manifest, StoreError> {
        let path = root.join(MANIFEST);
        let (events, _): (Vec<ManifestEvent>, u64) = read_jsonl(&path)?;
        let mut m = Manifest::default();
        for ev in events {
            m.apply(ev).map_err(|reason| StoreError::Corrupt { path: path.clone(), reason })?;
        }
        Ok(m)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn writable(&self) -> Result<(), StoreError> {
        if self.lock.is_none() {
            return Err(StoreError::Locked(self.root.clone()));
        }
        Ok(())
    }

    /// Appends new entries; any duplicate id rejects the whole batch.
    pub fn append_entries(&mut self, entries: Vec<ManifestEntry>) -> Result<(), StoreError> {
        self.writable()?;
        let mut seen = std::collections::BTreeSet::new();
        for e in &entries {
            if self.manifest.contains(&e.figure_id) || !seen.insert(e.figure_id.as_str()) {
                return Err(StoreError::Conflict(e.figure_id.clone()));
            }
        }
        let events: Vec<ManifestEvent> = entries.into_iter().map(ManifestEvent::Entry).collect();
        append_jsonl(&self.root.join(MANIFEST), &events)?;
        for ev in events {
            self.manifest.apply(ev).expect("checked above");
        }
        Ok(())
    }

    pub fn append_entry(&mut self, entry: ManifestEntry) -> Result<(), StoreError> {
        self.append_entries(vec![entry])
    }

    /// Records stage outcomes for known figures.
    pub fn record_stages(&mut self, updates: Vec<(String, Stage, StageStatus, EntryPaths)>) -> Result<(), StoreError> {
        self.writable()?;
        if let Some((id, ..)) = updates.iter().find(|(id, ..)| !self.manifest.contains(id)) {
            return Err(StoreError::UnknownFigure(id.clone()));
        }
        let events: Vec<ManifestEvent> = updates
            .into_iter()
            .map(|(figure_id, stage, status, paths)| ManifestEvent::Stage { figure_id, stage, status, paths })
            .collect();
        append_jsonl(&self.root.join(MANIFEST), &events)?;
        for ev in events {
            self.manifest.apply(ev).expect("checked above");
        }
        Ok(())
    }

    pub fn append_log<T: Serialize>(&self, name: &str, records: &[T]) -> Result<(), StoreError> {
        self.writable()?;
        append_jsonl(&self.root.join(name), records)
    }

    pub fn read_log<T: DeserializeOwned>(&self, name: &str) -> Result<Vec<T>, StoreError> {
        Ok(read_jsonl(&self.root.join(name))?.0)
    }

    /// Writes an artifact atomically (temp file + rename) at a store-relative path.
    pub fn write_file(&self, rel: &str, bytes: &[u8]) -> Result<PathBuf, StoreError> {
        self.writable()?;
        let path = self.root.join(rel);
        let dir = path.parent().expect("store paths have a parent");
        fs::create_dir_all(dir).map_err(|e| StoreError::io(dir, e))?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| StoreError::io(dir, e))?;
        tmp.write_all(bytes).map_err(|e| StoreError::io(&path, e))?;
        tmp.persist(&path).map_err(|e| StoreError::io(&path, e.error))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> Result<PathBuf, StoreError> {
        let bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| StoreError::Corrupt { path: self.root.join(rel), reason: e.to_string() })?;
        self.write_file(rel, &bytes)
    }

    pub fn read_json<T: DeserializeOwned>(&self, rel: &str) -> Result<T, StoreError> {
        let path = self.root.join(rel);
        let text = fs::read_to_string(&path).map_err(|e| StoreError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| StoreError::Corrupt { path, reason: e.to_string() })
    }

    /// All QA batches referenced by the manifest, in manifest order.
    pub fn qa_batches(&self) -> Result<Vec<QaBatch>, StoreError> {
        self.manifest.entries().iter().filter_map(|e| e.paths.qa.as_deref()).map(|rel| self.read_json(rel)).collect()
    }

    /// Problems found by the integrity check; empty when the store is sound.
    pub fn integrity_problems(&self) -> Result<Vec<String>, StoreError> {
        let mut problems = Vec::new();
        for e in self.manifest.entries() {
            for rel in e.paths.iter() {
                if !self.root.join(rel).exists() {
                    problems.push(format!("{}: missing artifact {rel}", e.figure_id));
                }
            }
            if let Some((stage, _)) = e.dropped_at() {
                for later in stage.later() {
                    if e.status(*later).is_some() {
                        problems.push(format!("{}: {later} recorded after drop at {stage}", e.figure_id));
                    }
                }
            }
            if e.is_done(Stage::Qa) && e.paths.qa.is_none() {
                problems.push(format!("{}: qa done without a qa file", e.figure_id));
            }
        }
        let dir = self.root.join("qa");
        if let Ok(rd) = fs::read_dir(&dir) {
            let mut files: Vec<PathBuf> = rd.filter_map(|d| d.ok().map(|d| d.path())).collect();
            files.sort();
            for f in files.into_iter().filter(|f| f.extension().is_some_and(|x| x == "json")) {
                let text = fs::read_to_string(&f).map_err(|e| StoreError::io(&f, e))?;
                let batch: QaBatch = serde_json::from_str(&text)
                    .map_err(|e| StoreError::Corrupt { path: f.clone(), reason: e.to_string() })?;
                let ok = self.manifest.get(&batch.figure_id).is_some_and(ManifestEntry::image_done);
                let stray = batch.candidates.iter().chain(&batch.retained).any(|q| q.figure_id != batch.figure_id);
                if !ok {
                    problems.push(format!("{}: QA for a figure without a rendered image", batch.figure_id));
                }
                if stray {
                    problems.push(format!("{}: QA record names another figure", batch.figure_id));
                }
            }
        }
        Ok(problems)
    }

    /// Syncs the manifest file to disk.
    pub fn sync(&self) -> Result<(), StoreError> {
        let path = self.root.join(MANIFEST);
        match OpenOptions::new().append(true).open(&path) {
            Ok(f) => f.sync_all().map_err(|e| StoreError::io(&path, e)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
            Err(e) => Err(StoreError::io(&path, e)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChartType, Layout, Theme};
    use std::collections::BTreeMap;

    fn entry(id: &str) -> ManifestEntry {
        ManifestEntry {
            figure_id: id.into(),
            stage_status: BTreeMap::new(),
            paths: EntryPaths::default(),
            theme: Theme::Physics,
            layout: Layout::SINGLE,
            cell_types: vec![ChartType::Line],
            created_at: 7,
            seeds: BTreeMap::new(),
        }
    }

    #[test]
    fn append_reload_and_conflict() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Store::open(dir.path()).unwrap();
        s.append_entry(entry("a")).unwrap();
        s.record_stages(vec![("a".into(), Stage::Generate, StageStatus::Done, EntryPaths::default())]).unwrap();
        assert!(matches!(s.append_entry(entry("a")), Err(StoreError::Conflict(_))));
        assert!(matches!(
            s.record_stages(vec![("zz".into(), Stage::Generate, StageStatus::Done, EntryPaths::default())]),
            Err(StoreError::UnknownFigure(_))
        ));
        let reloaded = Store::load_manifest(dir.path()).unwrap();
        assert_eq!(&reloaded, s.manifest());
        assert_eq!(reloaded, Store::load_manifest(dir.path()).unwrap());
    }

    #[test]
    fn lock_excludes_second_writer() {
        let dir = tempfile::tempdir().unwrap();
        let s = Store::open(dir.path()).unwrap();
        assert!(matches!(Store::open(dir.path()), Err(StoreError::Locked(_))));
        drop(s);
        Store::open(dir.path()).unwrap();
    }

    #[test]
    fn stale_lock_is_replaced() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(LOCK_FILE), "999999999\n").unwrap();
        Store::open(dir.path()).unwrap();
    }

    #[test]
    fn torn_tail_is_skipped_then_truncated() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut s = Store::open(dir.path()).unwrap();
            s.append_entry(entry("a")).unwrap();
            s.append_entry(entry("b")).unwrap();
        }
        let path = dir.path().join(MANIFEST);
        let len = fs::metadata(&path).unwrap().len();
        let f = OpenOptions::new().write(true).open(&path).unwrap();
        f.set_len(len - 10).unwrap();
        let m = Store::load_manifest(dir.path()).unwrap();
        assert_eq!(m.len(), 1);
        let mut s = Store::open(dir.path()).unwrap();
        s.append_entry(entry("b")).unwrap();
        assert_eq!(Store::load_manifest(dir.path()).unwrap().len(), 2);
    }

    #[test]
    fn corrupt_middle_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(MANIFEST), "{oops\n{}\n").unwrap();
        assert!(matches!(Store::load_manifest(dir.path()), Err(StoreError::Corrupt { .. })));
    }

    #[test]
    fn read_only_refuses_writes() {
        let dir = tempfile::tempdir().unwrap();
        drop(Store::open(dir.path()).unwrap());
        let mut ro = Store::open_read_only(dir.path()).unwrap();
        assert!(ro.append_entry(entry("a")).is_err());
    }
}
