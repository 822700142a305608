//! Stage orchestration over a store: generate → compose → diversify →
//! filter → qa. Every stage skips figures the manifest already settled, so
//! re-runs resume where a previous run stopped.

mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{BackendChoice, LiveSettings, RunConfig};

use crate::diversify::{diversify, postprocess_geometry, sample_strategy, DiversificationRecord, FigureKind, Strategy};
use crate::error::{PipelineError, RenderError};
use crate::filter::{aggregate_and_filter, rate_figure, RatingRecord};
use crate::gateway::Gateway;
use crate::generator::{
    figure_id_for, generate_figure, generate_single_figure, plan_multi_figure, sample_generation_task, FigurePlan,
    GeneratedFigure, GeneratorConfig, PromptTrace,
};
use crate::model::{ChartType, FigureSpec, GenerationTask, Layout, Theme};
use crate::qa::{generate_qas, QaBatch};
use crate::render::{emit_plot_program, render_all, ImageArtifact, PlotProgram, RenderProvenance, Sandbox};
use crate::store::{EntryPaths, ManifestEntry, Stage, StageStatus, Store, DIVERSIFY_LOG, FILTER_DECISIONS, RATINGS};
use crate::util::derive_seed;

pub const CAUSE_GENERATION: &str = "generation_failed";
pub const CAUSE_BELOW_MEAN: &str = "below_mean";
pub const CAUSE_RATING: &str = "rating_failed";
pub const CAUSE_DIVERSIFY: &str = "diversify_failed";
pub const CAUSE_QA: &str = "qa_failed";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub attempted: usize,
    pub done: usize,
    pub dropped: usize,
    /// Figures already settled by an earlier run.
    pub skipped: usize,
    pub drop_causes: BTreeMap<String, usize>,
}

impl StageReport {
    fn new(stage: Stage) -> Self {
        Self { stage: stage.as_str().into(), ..Self::default() }
    }

    fn count(&mut self, status: &StageStatus) {
        match status {
            StageStatus::Done => self.done += 1,
            StageStatus::Dropped { cause } => {
                self.dropped += 1;
                let key = cause.split(':').next().unwrap_or(cause).to_string();
                *self.drop_causes.entry(key).or_default() += 1;
            }
            StageStatus::Pending => {}
        }
    }
}

/// Counts derived from the manifest after a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ManifestCounts {
    pub figures: usize,
    pub images: usize,
    pub per_stage_done: BTreeMap<String, usize>,
    pub per_stage_dropped: BTreeMap<String, usize>,
    pub qa_candidates: usize,
    pub qa_retained: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub seed: u64,
    pub stages: Vec<StageReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub budget_exhausted: bool,
    pub requests_made: u64,
    pub counts: ManifestCounts,
    /// Share of filtered figures kept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter_retention: Option<f64>,
    /// Share of QA candidates kept by the confidence gate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qa_retention: Option<f64>,
    pub manifest_digest: String,
}

pub fn manifest_counts(store: &Store) -> Result<ManifestCounts, PipelineError> {
    let m = store.manifest();
    let mut c = ManifestCounts { figures: m.len(), ..ManifestCounts::default() };
    for e in m.entries() {
        c.images += e.image_done() as usize;
        for (stage, status) in &e.stage_status {
            let bucket = match status {
                StageStatus::Done => &mut c.per_stage_done,
                StageStatus::Dropped { .. } => &mut c.per_stage_dropped,
                StageStatus::Pending => continue,
            };
            *bucket.entry(stage.as_str().to_string()).or_default() += 1;
        }
    }
    for batch in store.qa_batches()? {
        c.qa_candidates += batch.candidates.len();
        c.qa_retained += batch.retained.len();
    }
    Ok(c)
}

fn now_secs() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Why one figure's job stopped.
#[derive(Debug)]
enum JobError {
    Budget(String),
    Failed(String),
}

enum Blueprint {
    Single(GenerationTask),
    Multi(FigurePlan),
}

struct CreationJob {
    figure_id: String,
    seed: u64,
    theme: Theme,
    layout: Layout,
    cell_types: Vec<ChartType>,
    blueprint: Blueprint,
}

#[derive(Serialize)]
struct GenerationProvenance<'a> {
    figure_id: &'a str,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    task: Option<&'a GenerationTask>,
    #[serde(skip_serializing_if = "Option::is_none")]
    plan: Option<&'a FigurePlan>,
    traces: &'a [PromptTrace],
    render: &'a RenderProvenance,
}

/// One line of `diversify_log.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversifyLogLine {
    #[serde(flatten)]
    pub record: DiversificationRecord,
    pub postprocessed: bool,
    pub before_px: (u32, u32),
    pub after_px: (u32, u32),
}

struct DiversifyResult {
    figure_id: String,
    status: StageStatus,
    paths: EntryPaths,
    log: Option<DiversifyLogLine>,
}

pub struct Pipeline {
    config: RunConfig,
    generator: GeneratorConfig,
    gateway: Gateway,
    sandbox: Sandbox,
    started: Instant,
    pool: rayon::ThreadPool,
    cancel: Arc<AtomicBool>,
}

impl Pipeline {
    /// Validates the config and builds the gateway and sandbox. Fails before
    /// touching the store when the config is unusable.
    pub fn new(config: RunConfig, store_root: &Path) -> Result<Self, PipelineError> {
        config.validate()?;
        let generator = config.generator_config()?;
        // Backend problems (a missing key) surface before anything touches disk.
        let gateway = config.gateway(None)?;
        let audit = store_root.join("audit").join("gateway.jsonl");
        if let Some(dir) = audit.parent() {
            fs::create_dir_all(dir).map_err(|e| PipelineError::Other(format!("{}: {e}", dir.display())))?;
        }
        let gateway = gateway.with_audit_log(&audit)?;
        let sandbox = Sandbox::new().with_timeout(Duration::from_secs(config.timeout_seconds)).deny_read(store_root);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| PipelineError::Other(e.to_string()))?;
        Ok(Self { config, generator, gateway, sandbox, started: Instant::now(), pool, cancel: Arc::default() })
    }

    /// Shares a flag that, once set, stops new per-figure work. Jobs already
    /// running finish and are persisted; the run ends as a resumable stop.
    pub fn with_cancel(mut self, flag: Arc<AtomicBool>) -> Self {
        self.cancel = flag;
        self
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn gateway(&self) -> &Gateway {
        &self.gateway
    }

    pub fn sandbox(&self) -> &Sandbox {
        &self.sandbox
    }

    fn wall_clock_left(&self) -> Result<(), JobError> {
        if self.cancel.load(Ordering::Relaxed) {
            return Err(JobError::Budget("interrupted".into()));
        }
        match self.config.max_wall_seconds {
            Some(limit) if self.started.elapsed() > Duration::from_secs(limit) => {
                Err(JobError::Budget(format!("wall-clock cap of {limit} s reached")))
            }
            _ => Ok(()),
        }
    }

    fn par_map<T: Sync, R: Send>(&self, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
        self.pool.install(|| items.par_iter().map(f).collect())
    }

    pub fn run_stage(&self, store: &mut Store, stage: Stage) -> Result<StageReport, PipelineError> {
        let report = match stage {
            Stage::Generate => self.stage_generate(store),
            Stage::Compose => self.stage_compose(store),
            Stage::Diversify => self.stage_diversify(store),
            Stage::Filter => self.stage_filter(store),
            Stage::Qa => self.stage_qa(store),
        };
        store.sync()?;
        report
    }

    /// All five stages in order. Errors are recorded in the summary rather
    /// than returned, so a partial run still reports what it did.
    pub fn run(&self, store: &mut Store) -> PipelineSummary {
        let mut summary = PipelineSummary { seed: self.config.seed, ..PipelineSummary::default() };
        for stage in Stage::ALL {
            if store.manifest().is_empty() && !matches!(stage, Stage::Generate | Stage::Compose) {
                break;
            }
            match self.run_stage(store, stage) {
                Ok(r) => summary.stages.push(r),
                Err(e) => {
                    log::error!("stage {stage} failed: {e}");
                    summary.budget_exhausted = e.is_budget();
                    summary.failed_stage = Some(stage.as_str().into());
                    summary.error = Some(e.to_string());
                    break;
                }
            }
        }
        self.finish_summary(store, &mut summary);
        summary
    }

    fn finish_summary(&self, store: &Store, summary: &mut PipelineSummary) {
        summary.requests_made = self.gateway.requests_made();
        match manifest_counts(store) {
            Ok(c) => summary.counts = c,
            Err(e) => {
                summary.error.get_or_insert(e.to_string());
            }
        }
        let m = store.manifest();
        let filtered: Vec<_> = m.entries().iter().filter_map(|e| e.status(Stage::Filter)).collect();
        if !filtered.is_empty() {
            summary.filter_retention =
                Some(filtered.iter().filter(|s| s.is_done()).count() as f64 / filtered.len() as f64);
        }
        if summary.counts.qa_candidates > 0 {
            summary.qa_retention = Some(summary.counts.qa_retained as f64 / summary.counts.qa_candidates as f64);
        }
        summary.manifest_digest = m.content_digest();
    }

    fn stage_generate(&self, store: &mut Store) -> Result<StageReport, PipelineError> {
        let mut jobs = Vec::new();
        for i in 0..self.config.n_single {
            let seed = derive_seed(self.config.seed, &["single", &i.to_string()]);
            let task =
                sample_generation_task(seed, &self.generator).map_err(|e| PipelineError::Config(e.to_string()))?;
            jobs.push(CreationJob {
                figure_id: figure_id_for("single", &task),
                seed,
                theme: task.theme,
                layout: Layout::SINGLE,
                cell_types: vec![task.chart_type],
                blueprint: Blueprint::Single(task),
            });
        }
        self.create_figures(store, Stage::Generate, jobs)
    }

    fn stage_compose(&self, store: &mut Store) -> Result<StageReport, PipelineError> {
        let mut jobs = Vec::new();
        for i in 0..self.config.n_multi {
            let seed = derive_seed(self.config.seed, &["multi", &i.to_string()]);
            let mut plan =
                plan_multi_figure(seed, &self.generator).map_err(|e| PipelineError::Config(e.to_string()))?;
            plan.mode = self.config.generation_mode;
            jobs.push(CreationJob {
                figure_id: figure_id_for("multi", &plan),
                seed,
                theme: plan.theme,
                layout: plan.layout,
                cell_types: plan.cell_types.clone(),
                blueprint: Blueprint::Multi(plan),
            });
        }
        self.create_figures(store, Stage::Compose, jobs)
    }

    /// Generates specs, renders them and appends one manifest entry per figure.
    fn create_figures(
        &self,
        store: &mut Store,
        stage: Stage,
        jobs: Vec<CreationJob>,
    ) -> Result<StageReport, PipelineError> {
        let mut report = StageReport::new(stage);
        let (done, jobs): (Vec<_>, Vec<_>) = jobs.into_iter().partition(|j| store.manifest().contains(&j.figure_id));
        report.skipped = done.len();
        report.attempted = jobs.len();
        if jobs.is_empty() {
            return Ok(report);
        }
        let dpi = self.config.dpi;
        let generated: Vec<Result<GeneratedFigure, JobError>> = self.par_map(&jobs, |job| {
            self.wall_clock_left()?;
            let out = match &job.blueprint {
                Blueprint::Single(task) => generate_single_figure(task, &self.gateway, dpi),
                Blueprint::Multi(plan) => generate_figure(plan, &self.gateway, dpi),
            };
            out.map_err(
                |e| if e.is_budget() { JobError::Budget(e.to_string()) } else { JobError::Failed(e.to_string()) },
            )
        });

        let programs: Vec<PlotProgram> =
            generated.iter().filter_map(|g| g.as_ref().ok()).map(|g| emit_plot_program(&g.spec)).collect();
        let images_dir = store.path("images");
        let mut renders = render_all(&self.sandbox, &programs, &images_dir, self.config.render_workers).into_iter();
        let mut programs = programs.into_iter();

        let mut entries = Vec::new();
        let mut budget = None;
        for (job, result) in jobs.iter().zip(generated) {
            let mut entry = ManifestEntry {
                figure_id: job.figure_id.clone(),
                stage_status: BTreeMap::new(),
                paths: EntryPaths::default(),
                theme: job.theme,
                layout: job.layout,
                cell_types: job.cell_types.clone(),
                created_at: now_secs(),
                seeds: BTreeMap::from([("figure".to_string(), job.seed)]),
            };
            let status = match result {
                Err(JobError::Budget(msg)) => {
                    budget.get_or_insert(msg);
                    continue;
                }
                Err(JobError::Failed(msg)) => {
                    log::warn!("{}: {msg}", job.figure_id);
                    StageStatus::Dropped { cause: CAUSE_GENERATION.into() }
                }
                Ok(fig) => {
                    let program = programs.next().expect("one program per generated figure");
                    let (render, provenance) = renders.next().expect("one render per program");
                    let id = &job.figure_id;
                    debug_assert_eq!(&fig.spec.figure_id, id);
                    let spec_rel = format!("specs/{id}.json");
                    let program_rel = format!("programs/{id}.py");
                    store.write_json(&spec_rel, &fig.spec)?;
                    store.write_file(&program_rel, program.source.as_bytes())?;
                    let (task, plan) = match &job.blueprint {
                        Blueprint::Single(t) => (Some(t), None),
                        Blueprint::Multi(p) => (None, Some(p)),
                    };
                    store.write_json(
                        &format!("specs/{id}.provenance.json"),
                        &GenerationProvenance {
                            figure_id: id,
                            seed: job.seed,
                            task,
                            plan,
                            traces: &fig.traces,
                            render: &provenance,
                        },
                    )?;
                    entry.paths.spec = Some(spec_rel);
                    entry.paths.program = Some(program_rel);
                    match render {
                        Ok(_) => {
                            entry.paths.image = Some(format!("images/{id}.png"));
                            StageStatus::Done
                        }
                        Err(e) => render_drop(id, &e),
                    }
                }
            };
            report.count(&status);
            entry.stage_status.insert(stage, status);
            entries.push(entry);
        }
        store.append_entries(entries)?;
        match budget {
            Some(msg) => Err(PipelineError::Budget(msg)),
            None => Ok(report),
        }
    }

    fn load_spec_and_program(&self, store: &Store, entry: &ManifestEntry) -> Result<(FigureSpec, PlotProgram), String> {
        let spec_rel = entry.paths.spec.as_deref().ok_or("no spec path")?;
        let spec: FigureSpec = store.read_json(spec_rel).map_err(|e| e.to_string())?;
        let program_rel = entry.paths.program.as_deref().ok_or("no program path")?;
        let source = fs::read_to_string(store.path(program_rel)).map_err(|e| e.to_string())?;
        let program = emit_plot_program(&spec).with_source(source, None);
        Ok((spec, program))
    }

    fn dependency_check(
        &self,
        store: &Store,
        stage: &'static str,
        needs: &'static str,
        prerequisite: impl Fn(&ManifestEntry) -> bool,
    ) -> Result<(), PipelineError> {
        if store.manifest().entries().iter().any(prerequisite) {
            return Ok(());
        }
        Err(PipelineError::Dependency {
            stage,
            needs,
            detail: format!("no figure in {} has completed {needs}", store.root().display()),
        })
    }

    fn stage_diversify(&self, store: &mut Store) -> Result<StageReport, PipelineError> {
        let mut report = StageReport::new(Stage::Diversify);
        self.dependency_check(store, "diversify", "generate or compose", |e| e.status(e.origin_stage()).is_some())?;
        let candidates: Vec<ManifestEntry> =
            store.manifest().entries().iter().filter(|e| e.image_done()).cloned().collect();
        let (settled, pending): (Vec<_>, Vec<_>) =
            candidates.into_iter().partition(|e| e.status(Stage::Diversify).is_some());
        report.skipped = settled.len();
        report.attempted = pending.len();
        let shared: &Store = store;
        let results: Vec<Result<DiversifyResult, JobError>> =
            self.par_map(&pending, |entry| self.diversify_one(shared, entry));
        let mut updates = Vec::new();
        let mut logs = Vec::new();
        let mut budget = None;
        for r in results {
            match r {
                Ok(d) => {
                    report.count(&d.status);
                    logs.extend(d.log);
                    updates.push((d.figure_id, Stage::Diversify, d.status, d.paths));
                }
                Err(JobError::Budget(msg)) => {
                    budget.get_or_insert(msg);
                }
                Err(JobError::Failed(msg)) => return Err(PipelineError::Other(msg)),
            }
        }
        store.append_log(DIVERSIFY_LOG, &logs)?;
        store.record_stages(updates)?;
        match budget {
            Some(msg) => Err(PipelineError::Budget(msg)),
            None => Ok(report),
        }
    }

    fn diversify_one(&self, store: &Store, entry: &ManifestEntry) -> Result<DiversifyResult, JobError> {
        self.wall_clock_left()?;
        let id = entry.figure_id.clone();
        let dropped = |cause: String| DiversifyResult {
            figure_id: id.clone(),
            status: StageStatus::Dropped { cause },
            paths: EntryPaths::default(),
            log: None,
        };
        let (_, program) = match self.load_spec_and_program(store, entry) {
            Ok(v) => v,
            Err(e) => return Ok(dropped(format!("{CAUSE_DIVERSIFY}: {e}"))),
        };
        let kind = FigureKind::of(entry.layout);
        let strategy: Strategy = sample_strategy(derive_seed(self.config.seed, &["diversify", &id]), kind);
        let scratch = tempfile::tempdir().map_err(|e| JobError::Failed(e.to_string()))?;
        let counter = AtomicUsize::new(0);
        let check = |p: &PlotProgram| -> Result<ImageArtifact, RenderError> {
            let n = counter.fetch_add(1, Ordering::SeqCst);
            self.sandbox.render(p, &scratch.path().join(n.to_string()))
        };
        let budget_or = |e: crate::error::DiversifyError| {
            if e.is_budget() {
                Err(JobError::Budget(e.to_string()))
            } else {
                log::warn!("{id}: {e}");
                Ok(dropped(CAUSE_DIVERSIFY.into()))
            }
        };
        let out = match diversify(&program, strategy, entry.layout, &self.gateway, &check) {
            Ok(o) => o,
            Err(e) => return budget_or(e),
        };
        let pp = match postprocess_geometry(&out.program, &self.gateway, &check) {
            Ok(p) => p,
            Err(e) => return budget_or(e),
        };
        let artifact: Option<&ImageArtifact> = pp.artifact.as_ref().or(out.artifact.as_ref());
        let mut paths = EntryPaths::default();
        let write =
            |r: Result<PathBuf, crate::error::StoreError>| r.map(|_| ()).map_err(|e| JobError::Failed(e.to_string()));
        if pp.program.source != program.source {
            let rel = format!("programs/{id}.diversified.py");
            write(store.write_file(&rel, pp.program.source.as_bytes()))?;
            paths.program = Some(rel);
        }
        if let Some(a) = artifact {
            let original = store.path(&format!("images/{id}.png"));
            let keep = store.path(&format!("images/undiversified/{id}.png"));
            if !keep.exists() {
                fs::copy(&original, &keep).map_err(|e| JobError::Failed(format!("{}: {e}", original.display())))?;
            }
            let bytes = fs::read(&a.path).map_err(|e| JobError::Failed(format!("{}: {e}", a.path.display())))?;
            write(store.write_file(&format!("images/{id}.png"), &bytes))?;
            paths.image = Some(format!("images/{id}.png"));
        }
        let mut record = out.record;
        record.flags.extend(pp.flags.iter().cloned());
        Ok(DiversifyResult {
            figure_id: id,
            status: StageStatus::Done,
            paths,
            log: Some(DiversifyLogLine {
                record,
                postprocessed: pp.changed,
                before_px: pp.before_px,
                after_px: pp.after_px,
            }),
        })
    }

    fn stage_filter(&self, store: &mut Store) -> Result<StageReport, PipelineError> {
        let mut report = StageReport::new(Stage::Filter);
        self.dependency_check(store, "filter", "diversify", |e| e.status(Stage::Diversify).is_some())?;
        let candidates: Vec<ManifestEntry> = store
            .manifest()
            .done(Stage::Diversify)
            .filter(|e| e.alive() || e.status(Stage::Filter).is_some())
            .cloned()
            .collect();
        let (settled, pending): (Vec<_>, Vec<_>) =
            candidates.into_iter().partition(|e| e.status(Stage::Filter).is_some());
        report.skipped = settled.len();
        report.attempted = pending.len();
        if pending.is_empty() {
            return Ok(report);
        }
        let mut ratings: BTreeMap<String, RatingRecord> =
            store.read_log::<RatingRecord>(RATINGS)?.into_iter().map(|r| (r.figure_id.clone(), r)).collect();
        let unrated: Vec<&ManifestEntry> = pending.iter().filter(|e| !ratings.contains_key(&e.figure_id)).collect();
        let shared: &Store = store;
        let rated: Vec<Result<Result<RatingRecord, String>, JobError>> = self.par_map(&unrated, |entry| {
            self.wall_clock_left()?;
            let (spec, _) = match self.load_spec_and_program(shared, entry) {
                Ok(v) => v,
                Err(e) => return Ok(Err(e)),
            };
            let image = shared.path(entry.paths.image.as_deref().unwrap_or_default());
            match rate_figure(&image, &spec, &self.gateway) {
                Ok(r) => Ok(Ok(r)),
                Err(crate::error::FilterError::Gateway(g)) if g.is_budget() => Err(JobError::Budget(g.to_string())),
                Err(e) => Ok(Err(e.to_string())),
            }
        });
        let mut fresh = Vec::new();
        let mut failed = Vec::new();
        let mut budget = None;
        for (entry, r) in unrated.iter().zip(rated) {
            match r {
                Ok(Ok(rec)) => fresh.push(rec),
                Ok(Err(msg)) => {
                    log::warn!("{}: rating failed: {msg}", entry.figure_id);
                    failed.push(entry.figure_id.clone());
                }
                Err(JobError::Budget(msg)) => {
                    budget.get_or_insert(msg);
                }
                Err(JobError::Failed(msg)) => return Err(PipelineError::Other(msg)),
            }
        }
        store.append_log(RATINGS, &fresh)?;
        ratings.extend(fresh.into_iter().map(|r| (r.figure_id.clone(), r)));
        let mut updates: Vec<(String, Stage, StageStatus, EntryPaths)> = failed
            .into_iter()
            .map(|id| (id, Stage::Filter, StageStatus::Dropped { cause: CAUSE_RATING.into() }, EntryPaths::default()))
            .collect();
        if let Some(msg) = budget {
            store.record_stages(updates)?;
            return Err(PipelineError::Budget(msg));
        }
        let corpus: Vec<RatingRecord> = pending.iter().filter_map(|e| ratings.get(&e.figure_id)).cloned().collect();
        if !corpus.is_empty() {
            let outcome = aggregate_and_filter(&corpus)?;
            if outcome.degenerate {
                log::warn!("all {} figures share one score; keeping all of them", corpus.len());
            }
            store.append_log(FILTER_DECISIONS, &outcome.decisions)?;
            for d in &outcome.decisions {
                let status = if d.retained {
                    StageStatus::Done
                } else {
                    StageStatus::Dropped { cause: CAUSE_BELOW_MEAN.into() }
                };
                let paths = EntryPaths { ratings: Some(RATINGS.into()), ..EntryPaths::default() };
                updates.push((d.figure_id.clone(), Stage::Filter, status, paths));
            }
        }
        for (_, _, status, _) in &updates {
            report.count(status);
        }
        store.record_stages(updates)?;
        Ok(report)
    }

    fn stage_qa(&self, store: &mut Store) -> Result<StageReport, PipelineError> {
        let mut report = StageReport::new(Stage::Qa);
        self.dependency_check(store, "qa", "filter", |e| e.status(Stage::Filter).is_some())?;
        let candidates: Vec<ManifestEntry> = store.manifest().done(Stage::Filter).cloned().collect();
        let (settled, pending): (Vec<_>, Vec<_>) = candidates.into_iter().partition(|e| e.status(Stage::Qa).is_some());
        report.skipped = settled.len();
        report.attempted = pending.len();
        let (n_desc, n_reason) = (self.config.n_desc, self.config.n_reason);
        let shared: &Store = store;
        let results: Vec<Result<StageStatus, JobError>> = self.par_map(&pending, |entry| {
            self.wall_clock_left()?;
            let id = &entry.figure_id;
            let (spec, program) = match self.load_spec_and_program(shared, entry) {
                Ok(v) => v,
                Err(e) => return Ok(StageStatus::Dropped { cause: format!("{CAUSE_QA}: {e}") }),
            };
            let image = shared.path(entry.paths.image.as_deref().unwrap_or_default());
            match generate_qas(&spec, &program, &image, &self.gateway, n_desc, n_reason) {
                Ok(cands) => {
                    let batch = QaBatch::new(id.clone(), cands);
                    shared.write_json(&format!("qa/{id}.json"), &batch).map_err(|e| JobError::Failed(e.to_string()))?;
                    Ok(StageStatus::Done)
                }
                Err(crate::error::QaError::Gateway(g)) if g.is_budget() => Err(JobError::Budget(g.to_string())),
                Err(e) => {
                    log::warn!("{id}: {e}");
                    Ok(StageStatus::Dropped { cause: CAUSE_QA.into() })
                }
            }
        });
        let mut updates = Vec::new();
        let mut budget = None;
        for (entry, r) in pending.iter().zip(results) {
            match r {
                Ok(status) => {
                    report.count(&status);
                    let paths = match status {
                        StageStatus::Done => {
                            EntryPaths { qa: Some(format!("qa/{}.json", entry.figure_id)), ..EntryPaths::default() }
                        }
                        _ => EntryPaths::default(),
                    };
                    updates.push((entry.figure_id.clone(), Stage::Qa, status, paths));
                }
                Err(JobError::Budget(msg)) => {
                    budget.get_or_insert(msg);
                }
                Err(JobError::Failed(msg)) => return Err(PipelineError::Other(msg)),
            }
        }
        store.record_stages(updates)?;
        match budget {
            Some(msg) => Err(PipelineError::Budget(msg)),
            None => Ok(report),
        }
    }
}

fn render_drop(id: &str, e: &RenderError) -> StageStatus {
    log::warn!("{id}: render failed: {e}");
    StageStatus::Dropped { cause: format!("render_failed:{}", e.code()) }
}
