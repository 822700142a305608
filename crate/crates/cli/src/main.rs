use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use chartforge_core::eval::{compute_accuracy, judge_item, load_items, EvalMode};
use chartforge_core::generator::GenerationMode;
use chartforge_core::metrics::{
    compute_metrics, style_change_stats, BootstrapSpec, CommandExtractor, FeatureExtractor, LogBase, MetricsRequest,
    ToyExtractor,
};
use chartforge_core::pipeline::{manifest_counts, BackendChoice, Pipeline, RunConfig};
use chartforge_core::store::{distribution_report, export_training_set, ExportFormat, ExportSpec, Stage, Store};
use chartforge_core::PipelineError;

/// Exit status for a run stopped by its request or wall-clock budget.
const EXIT_BUDGET: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "chartforge", version, about = "Synthetic chart dataset pipeline")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Dataset store directory.
    #[arg(long, global = true, default_value = "chartforge-store")]
    store: PathBuf,
    /// TOML run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    backend: Option<Backend>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    render_workers: Option<usize>,
    #[arg(long, global = true)]
    dpi: Option<u32>,
    #[arg(long, global = true)]
    timeout_seconds: Option<u64>,
    /// Cap on gateway requests for this invocation.
    #[arg(long, global = true)]
    max_requests: Option<u64>,
    /// Cap on wall-clock seconds for this invocation.
    #[arg(long, global = true)]
    max_wall_seconds: Option<u64>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Backend {
    Stub,
    Live,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Conditional,
    Parallel,
    Joint,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum JudgeModeArg {
    Offline,
    Judge,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Plain,
    Instruction,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate and render single-plot figures.
    Generate {
        #[arg(long)]
        n_single: Option<usize>,
    },
    /// Generate and render multi-subplot figures.
    Compose {
        #[arg(long)]
        n_multi: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Restyle rendered figures and fix their geometry.
    Diversify,
    /// Rate figures and keep those above the corpus mean.
    Filter,
    /// Synthesize QA pairs for retained figures.
    Qa {
        #[arg(long)]
        n_desc: Option<usize>,
        #[arg(long)]
        n_reason: Option<usize>,
    },
    /// Run all five stages.
    Pipeline {
        #[arg(long)]
        n_single: Option<usize>,
        #[arg(long)]
        n_multi: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Pixel entropy, FID and style-change statistics.
    Metrics {
        /// Images to score; defaults to the store's rendered figures.
        #[arg(long)]
        images: Option<PathBuf>,
        /// Reference image directory; enables FID.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        per_image: bool,
        /// Bootstrap FID over 10 subsamples of 80%.
        #[arg(long)]
        bootstrap: bool,
        /// Natural-log entropy instead of bits.
        #[arg(long)]
        nats: bool,
        /// External feature extractor command (image path appended).
        #[arg(long)]
        extractor: Option<String>,
        /// Also tally style changes between original and diversified programs.
        #[arg(long)]
        style: bool,
    },
    /// Score predictions against exported QA ground truth.
    Eval {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum, default_value = "offline")]
        mode: JudgeModeArg,
        /// Relative tolerance for numeric answers.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Directory for report.json and verdicts.jsonl.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Corpus distribution report; optionally export a training set.
    Report {
        #[arg(long)]
        export: Option<PathBuf>,
        /// Descriptive:reasoning mixture, e.g. 1:1 or 5:0.
        #[arg(long, default_value = "1:1")]
        ratio: String,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long, value_enum, default_value = "plain")]
        format: FormatArg,
    },
}

fn build_config(g: &Global) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::from_toml_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(b) = g.backend {
        cfg.backend = match b {
            Backend::Stub => BackendChoice::Stub,
            Backend::Live => BackendChoice::Live,
        };
    }
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = g.$field { cfg.$field = v; } )* };
    }
    set!(seed, workers, render_workers, dpi, timeout_seconds);
    if g.max_requests.is_some() {
        cfg.max_requests = g.max_requests;
    }
    if g.max_wall_seconds.is_some() {
        cfg.max_wall_seconds = g.max_wall_seconds;
    }
    Ok(cfg)
}

fn mode(m: Mode) -> GenerationMode {
    match m {
        Mode::Conditional => GenerationMode::Conditional,
        Mode::Parallel => GenerationMode::Parallel,
        Mode::Joint => GenerationMode::Joint,
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    let written =
        serde_json::to_writer_pretty(&mut out, value).map_err(std::io::Error::from).and_then(|()| writeln!(out));
    match written {
        // A closed reader (`| head`) is not a failure of the command.
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn pngs_in(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png") || x.eq_ignore_ascii_case("jpg")))
        .collect();
    out.sort();
    Ok(out)
}

fn parse_ratio(text: &str) -> Result<(u32, u32)> {
    let (a, b) = text.split_once(':').context("ratio must look like D:R")?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

/// First Ctrl-C drains: running jobs finish, nothing new starts. A second one
/// exits immediately.
fn interrupt_flag() -> Arc<AtomicBool> {
    let flag = Arc::new(AtomicBool::new(false));
    let seen = Arc::clone(&flag);
    let installed = ctrlc::set_handler(move || {
        if seen.swap(true, Ordering::SeqCst) {
            std::process::exit(130);
        }
        eprintln!("interrupt: finishing in-flight work");
    });
    if let Err(e) = installed {
        log::warn!("no interrupt handler: {e}");
    }
    flag
}

fn run_stage(global: &Global, cfg: RunConfig, stage: Stage) -> Result<()> {
    if stage == Stage::Generate && cfg.n_single == 0 || stage == Stage::Compose && cfg.n_multi == 0 {
        log::info!("nothing to {stage}");
    }
    cfg.validate()?;
    let pipeline = Pipeline::new(cfg, &global.store)?.with_cancel(interrupt_flag());
    let mut store = Store::open(&global.store)?;
    let report = pipeline.run_stage(&mut store, stage)?;
    print_json(&report)
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let mut cfg = build_config(g)?;
    match cli.command {
        Command::Generate { n_single } => {
            cfg.n_single = n_single.unwrap_or(cfg.n_single);
            run_stage(g, cfg, Stage::Generate)
        }
        Command::Compose { n_multi, mode: m } => {
            cfg.n_multi = n_multi.unwrap_or(cfg.n_multi);
            if let Some(m) = m {
                cfg.generation_mode = mode(m);
            }
            run_stage(g, cfg, Stage::Compose)
        }
        Command::Diversify => run_stage(g, cfg, Stage::Diversify),
        Command::Filter => run_stage(g, cfg, Stage::Filter),
        Command::Qa { n_desc, n_reason } => {
            cfg.n_desc = n_desc.unwrap_or(cfg.n_desc);
            cfg.n_reason = n_reason.unwrap_or(cfg.n_reason);
            run_stage(g, cfg, Stage::Qa)
        }
        Command::Pipeline { n_single, n_multi, mode: m } => {
            cfg.n_single = n_single.unwrap_or(cfg.n_single);
            cfg.n_multi = n_multi.unwrap_or(cfg.n_multi);
            if let Some(m) = m {
                cfg.generation_mode = mode(m);
            }
            let pipeline = Pipeline::new(cfg, &g.store)?.with_cancel(interrupt_flag());
            let mut store = Store::open(&g.store)?;
            let summary = pipeline.run(&mut store);
            print_json(&summary)?;
            if summary.budget_exhausted {
                return Err(PipelineError::Budget(summary.error.unwrap_or_default()).into());
            }
            if let Some(e) = summary.error {
                bail!("stage {} failed: {e}", summary.failed_stage.unwrap_or_default());
            }
            Ok(())
        }
        Command::Metrics { images, reference, per_image, bootstrap, nats, extractor, style } => {
            let store = Store::open_read_only(&g.store).ok();
            let images = match images {
                Some(dir) => pngs_in(&dir)?,
                None => {
                    let store = store.as_ref().context("no --images given and the store cannot be read")?;
                    store
                        .manifest()
                        .entries()
                        .iter()
                        .filter(|e| e.image_done())
                        .filter_map(|e| e.paths.image.as_deref().map(|p| store.path(p)))
                        .collect()
                }
            };
            let extractor: Box<dyn FeatureExtractor> = match extractor {
                Some(cmd) => Box::new(CommandExtractor::parse(&cmd)?),
                None => Box::new(ToyExtractor),
            };
            let req = MetricsRequest {
                images,
                reference: reference.as_deref().map(pngs_in).transpose()?.unwrap_or_default(),
                base: if nats { LogBase::E } else { LogBase::Two },
                per_image,
                bootstrap: bootstrap.then(|| BootstrapSpec { seed: cfg.seed, ..BootstrapSpec::default() }),
            };
            let report = compute_metrics(&req, extractor.as_ref())?;
            let mut value = serde_json::to_value(&report)?;
            if style {
                let store = store.as_ref().context("--style needs a readable store")?;
                let mut pairs = Vec::new();
                for e in store.manifest().entries() {
                    let Some(now) = e.paths.program.as_deref() else { continue };
                    let before = store.path(&format!("programs/{}.py", e.figure_id));
                    if now.ends_with(".diversified.py") {
                        pairs.push((
                            e.figure_id.clone(),
                            std::fs::read_to_string(&before)?,
                            std::fs::read_to_string(store.path(now))?,
                        ));
                    }
                }
                value["style_changes"] = serde_json::to_value(style_change_stats(&pairs)?)?;
            }
            print_json(&value)
        }
        Command::Eval { predictions, dataset, mode: m, tolerance, out } => {
            let tol = tolerance.unwrap_or(cfg.tolerance);
            let items = load_items(&predictions, &dataset)?;
            let mode = match m {
                JudgeModeArg::Offline => EvalMode::Offline,
                JudgeModeArg::Judge => EvalMode::Judge,
            };
            let gateway = match mode {
                EvalMode::Judge => Some(cfg.gateway(None)?),
                EvalMode::Offline => None,
            };
            let verdicts =
                items.iter().map(|it| judge_item(it, mode, gateway.as_ref(), tol)).collect::<Result<Vec<_>, _>>()?;
            let report = compute_accuracy(&items, &verdicts)?;
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("report.json"), serde_json::to_vec_pretty(&report)?)?;
                let lines: Vec<String> = verdicts.iter().map(serde_json::to_string).collect::<Result<_, _>>()?;
                std::fs::write(dir.join("verdicts.jsonl"), lines.join("\n") + "\n")?;
            }
            print_json(&report)
        }
        Command::Report { export, ratio, size, format } => {
            let store = Store::open_read_only(&g.store)?;
            let entries: Vec<_> = store.manifest().entries().iter().filter(|e| e.image_done()).collect();
            let mut value = serde_json::json!({
                "distribution": distribution_report(entries)?,
                "counts": manifest_counts(&store)?,
            });
            if let Some(dir) = export {
                let spec = ExportSpec {
                    ratio: parse_ratio(&ratio)?,
                    size,
                    format: match format {
                        FormatArg::Plain => ExportFormat::Plain,
                        FormatArg::Instruction => ExportFormat::Instruction,
                    },
                    seed: cfg.seed,
                };
                value["export"] = serde_json::to_value(export_training_set(&store, &dir, &spec)?)?;
            }
            print_json(&value)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let budget = e.downcast_ref::<PipelineError>().is_some_and(PipelineError::is_budget);
            ExitCode::from(if budget { EXIT_BUDGET } else { 1 })
        }
    }
}
