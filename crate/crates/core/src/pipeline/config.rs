use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::PipelineError;
use crate::eval::{EvalMode, DEFAULT_TOLERANCE};
use crate::gateway::{Gateway, LiveBackend, LiveConfig};
use crate::generator::{GenerationMode, GeneratorConfig, DEFAULT_DPI};
use crate::model::{parse_layout, ChartType, Layout, Theme};
use crate::qa::{DEFAULT_N_DESC, DEFAULT_N_REASON};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    #[default]
    Stub,
    Live,
}

impl std::str::FromStr for BackendChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "stub" => Ok(Self::Stub),
            "live" => Ok(Self::Live),
            other => Err(format!("unknown backend {other:?} (expected stub or live)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiveSettings {
    pub endpoint: String,
    pub model: String,
}

impl Default for LiveSettings {
    fn default() -> Self {
        Self { endpoint: "https://api.openai.com/v1/chat/completions".into(), model: "gpt-4o".into() }
    }
}

/// Everything a run needs. Loaded from TOML; the CLI overrides fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub backend: BackendChoice,
    pub seed: u64,
    pub n_single: usize,
    pub n_multi: usize,
    /// Allow-lists; empty means everything.
    pub themes: Vec<String>,
    pub chart_types: Vec<String>,
    pub layouts: Vec<String>,
    pub generation_mode: GenerationMode,
    pub n_desc: usize,
    pub n_reason: usize,
    pub tolerance: f64,
    pub judge_mode: EvalMode,
    /// Figures processed concurrently per stage.
    pub workers: usize,
    pub render_workers: usize,
    /// In-flight gateway requests.
    pub concurrency: usize,
    pub dpi: u32,
    pub timeout_seconds: u64,
    pub max_requests: Option<u64>,
    pub max_wall_seconds: Option<u64>,
    pub live: LiveSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        let cpus = crate::render::default_workers();
        Self {
            backend: BackendChoice::Stub,
            seed: 1,
            n_single: 20,
            n_multi: 10,
            themes: Vec::new(),
            chart_types: Vec::new(),
            layouts: Vec::new(),
            generation_mode: GenerationMode::Conditional,
            n_desc: DEFAULT_N_DESC,
            n_reason: DEFAULT_N_REASON,
            tolerance: DEFAULT_TOLERANCE,
            judge_mode: EvalMode::Offline,
            workers: cpus.min(8),
            render_workers: cpus.min(8),
            concurrency: 4,
            dpi: DEFAULT_DPI,
            timeout_seconds: 60,
            max_requests: None,
            max_wall_seconds: None,
            live: LiveSettings::default(),
        }
    }
}

fn parse_all<T>(items: &[String], what: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, PipelineError> {
    items.iter().map(|s| parse(s).ok_or_else(|| PipelineError::Config(format!("unknown {what} {s:?}")))).collect()
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.max_requests == Some(0) || self.max_wall_seconds == Some(0) {
            return Err(PipelineError::Config("budget caps must be positive".into()));
        }
        if self.workers == 0 || self.render_workers == 0 || self.concurrency == 0 {
            return Err(PipelineError::Config("worker counts must be positive".into()));
        }
        if !(50..=600).contains(&self.dpi) {
            return Err(PipelineError::Config(format!("dpi {} outside [50, 600]", self.dpi)));
        }
        if self.timeout_seconds == 0 {
            return Err(PipelineError::Config("timeout must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.tolerance) {
            return Err(PipelineError::Config(format!("tolerance {} outside [0, 1)", self.tolerance)));
        }
        self.generator_config()?;
        Ok(())
    }

    pub fn generator_config(&self) -> Result<GeneratorConfig, PipelineError> {
        let mut g = GeneratorConfig { dpi: self.dpi, ..GeneratorConfig::default() };
        if !self.themes.is_empty() {
            g.themes = parse_all(&self.themes, "theme", |s| s.parse::<Theme>().ok())?;
        }
        if !self.chart_types.is_empty() {
            g.chart_types = parse_all(&self.chart_types, "chart type", |s| s.parse::<ChartType>().ok())?;
        }
        if !self.layouts.is_empty() {
            let layouts: Vec<Layout> = parse_all(&self.layouts, "layout", |s| parse_layout(s).ok())?;
            g.layouts = layouts.into_iter().filter(|l| !l.is_single()).collect();
            if g.layouts.is_empty() && self.n_multi > 0 {
                return Err(PipelineError::Config(
                    "multi-subplot figures requested but no multi-cell layout allowed".into(),
                ));
            }
        }
        Ok(g)
    }

    /// Builds the gateway. The live backend checks its credentials here, before
    /// any work starts.
    pub fn gateway(&self, audit_log: Option<&Path>) -> Result<Gateway, PipelineError> {
        let mut gw = match self.backend {
            BackendChoice::Stub => Gateway::stub(self.seed),
            BackendChoice::Live => {
                let cfg = LiveConfig::from_env(&self.live.endpoint, &self.live.model)
                    .map_err(|e| PipelineError::Config(e.to_string()))?;
                Gateway::new(Arc::new(LiveBackend::new(cfg)))
            }
        };
        gw = gw.with_concurrency(self.concurrency);
        if let Some(limit) = self.max_requests {
            gw = gw.with_budget(limit);
        }
        if let Some(path) = audit_log {
            gw = gw.with_audit_log(path)?;
        }
        Ok(gw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_and_overrides() {
        let cfg =
            RunConfig::from_toml("seed = 7\nn_single = 3\nthemes = [\"Physics\"]\nlayouts = [\"(1, 2)\"]\n").unwrap();
        assert_eq!((cfg.seed, cfg.n_single), (7, 3));
        let g = cfg.generator_config().unwrap();
        assert_eq!(g.themes, vec![Theme::Physics]);
        assert_eq!(g.layouts, vec![Layout { rows: 1, cols: 2 }]);
        let back = RunConfig::from_toml(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_toml("bogus = 1").is_err());
        assert!(RunConfig { max_requests: Some(0), ..RunConfig::default() }.validate().is_err());
        assert!(RunConfig { themes: vec!["Alchemy".into()], ..RunConfig::default() }.validate().is_err());
    }
}
