use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{ChartType, Layout, Theme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Single-plot generation and render.
    Generate,
    /// Multi-subplot generation and render.
    Compose,
    Diversify,
    Filter,
    Qa,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Generate, Stage::Compose, Stage::Diversify, Stage::Filter, Stage::Qa];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Generate => "generate",
            Stage::Compose => "compose",
            Stage::Diversify => "diversify",
            Stage::Filter => "filter",
            Stage::Qa => "qa",
        }
    }

    /// Stages that come after this one for a figure.
    pub fn later(self) -> &'static [Stage] {
        match self {
            Stage::Generate | Stage::Compose => &[Stage::Diversify, Stage::Filter, Stage::Qa],
            Stage::Diversify => &[Stage::Filter, Stage::Qa],
            Stage::Filter => &[Stage::Qa],
            Stage::Qa => &[],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Stage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Stage::ALL.into_iter().find(|st| st.as_str() == s).ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum StageStatus {
    Pending,
    Done,
    Dropped { cause: String },
}

impl StageStatus {
    pub fn is_done(&self) -> bool {
        matches!(self, StageStatus::Done)
    }

    pub fn is_dropped(&self) -> bool {
        matches!(self, StageStatus::Dropped { .. })
    }
}

/// Store-relative artifact paths.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratings: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qa: Option<String>,
}

impl EntryPaths {
    fn merge(&mut self, other: &EntryPaths) {
        let pairs = [
            (&mut self.spec, &other.spec),
            (&mut self.program, &other.program),
            (&mut self.image, &other.image),
            (&mut self.ratings, &other.ratings),
            (&mut self.qa, &other.qa),
        ];
        for (mine, theirs) in pairs {
            if theirs.is_some() {
                mine.clone_from(theirs);
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        [&self.spec, &self.program, &self.image, &self.ratings, &self.qa].into_iter().flatten().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub figure_id: String,
    pub stage_status: BTreeMap<Stage, StageStatus>,
    pub paths: EntryPaths,
    pub theme: Theme,
    pub layout: Layout,
    pub cell_types: Vec<ChartType>,
    /// Unix seconds; excluded from content digests.
    pub created_at: u64,
    pub seeds: BTreeMap<String, u64>,
}

impl ManifestEntry {
    pub fn status(&self, stage: Stage) -> Option<&StageStatus> {
        self.stage_status.get(&stage)
    }

    pub fn is_done(&self, stage: Stage) -> bool {
        self.status(stage).is_some_and(StageStatus::is_done)
    }

    /// The creation stage: generate for singles, compose for the rest.
    pub fn origin_stage(&self) -> Stage {
        if self.layout.is_single() {
            Stage::Generate
        } else {
            Stage::Compose
        }
    }

    pub fn image_done(&self) -> bool {
        self.is_done(self.origin_stage())
    }

    /// First dropped stage, if any.
    pub fn dropped_at(&self) -> Option<(Stage, &str)> {
        Stage::ALL.into_iter().find_map(|s| match self.status(s) {
            Some(StageStatus::Dropped { cause }) => Some((s, cause.as_str())),
            _ => None,
        })
    }

    /// Whether the figure may still advance into `stage`.
    pub fn alive(&self) -> bool {
        self.dropped_at().is_none()
    }
}

/// One line of `manifest.jsonl`. The manifest is the replay of these events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ManifestEvent {
    Entry(ManifestEntry),
    Stage {
        figure_id: String,
        stage: Stage,
        status: StageStatus,
        #[serde(default)]
        paths: EntryPaths,
    },
}

impl ManifestEvent {
    pub fn figure_id(&self) -> &str {
        match self {
            ManifestEvent::Entry(e) => &e.figure_id,
            ManifestEvent::Stage { figure_id, .. } => figure_id,
        }
    }
}

/// In-memory manifest. Entries keep insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<ManifestEntry>,
    index: BTreeMap<String, usize>,
}

impl Manifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn get(&self, figure_id: &str) -> Option<&ManifestEntry> {
        self.index.get(figure_id).map(|&i| &self.entries[i])
    }

    pub fn contains(&self, figure_id: &str) -> bool {
        self.index.contains_key(figure_id)
    }

    /// Applies one event; the store checks conflicts before writing, so a
    /// replayed log never hits the error branches.
    pub(crate) fn apply(&mut self, event: ManifestEvent) -> Result<(), String> {
        match event {
            ManifestEvent::Entry(e) => {
                if self.index.contains_key(&e.figure_id) {
                    return Err(format!("duplicate figure {}", e.figure_id));
                }
                self.index.insert(e.figure_id.clone(), self.entries.len());
                self.entries.push(e);
            }
            ManifestEvent::Stage { figure_id, stage, status, paths } => {
                let &i = self.index.get(&figure_id).ok_or_else(|| format!("unknown figure {figure_id}"))?;
                let entry = &mut self.entries[i];
                entry.paths.merge(&paths);
                entry.stage_status.insert(stage, status);
            }
        }
        Ok(())
    }

    /// Canonical JSON of the entries with `created_at` zeroed, for
    /// reproducibility comparisons.
    pub fn content_digest(&self) -> String {
        let stripped: Vec<ManifestEntry> =
            self.entries.iter().map(|e| ManifestEntry { created_at: 0, ..e.clone() }).collect();
        crate::util::json_digest(&stripped)
    }

    /// Figures whose status for `stage` equals `Done`.
    pub fn done(&self, stage: Stage) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.is_done(stage))
    }
}
