use std::path::PathBuf;

use thiserror::Error;

use crate::gateway::TemplateId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("malformed layout {0:?}, expected \"(rows, cols)\"")]
    MalformedLayout(String),
    #[error("layout out of domain: {0}")]
    LayoutDomain(String),
    #[error("unknown chart type {0:?}")]
    UnknownChartType(String),
    #[error("unknown theme {0:?}")]
    UnknownTheme(String),
    #[error("unknown {kind} {value:?}")]
    UnknownName { kind: &'static str, value: String },
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("template {template}: missing slot {slot:?}")]
    MissingSlot { template: TemplateId, slot: String },
    #[error("gateway gave up after {attempts} attempts: {cause}")]
    AttemptsExhausted { attempts: u32, cause: String },
    #[error("request budget of {limit} calls exhausted")]
    BudgetExhausted { limit: u64 },
    #[error("gateway configuration: {0}")]
    Config(String),
    #[error("audit log: {0}")]
    Audit(#[from] std::io::Error),
}

impl GatewayError {
    pub fn is_budget(&self) -> bool {
        matches!(self, GatewayError::BudgetExhausted { .. })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StructuredError {
    #[error("no parsable structured block in completion")]
    NoBlock,
    #[error("schema {schema} violated: {reason}")]
    Schema { schema: &'static str, reason: String },
}

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("invalid generation config: {0}")]
    Config(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("generation failed after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

impl GenerationError {
    pub fn is_budget(&self) -> bool {
        matches!(self, GenerationError::Gateway(g) if g.is_budget())
    }
}

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("figure spec does not validate: {0}")]
    InvalidSpec(String),
    #[error("plotting runtime unavailable: {0}")]
    RuntimeUnavailable(String),
    #[error("program exited with status {status}: {stderr}")]
    ProgramFailed { status: String, stderr: String },
    #[error("program timed out after {seconds} s")]
    Timeout { seconds: u64 },
    #[error("NO_OUTPUT: program produced no image")]
    NoOutput,
    #[error("AMBIGUOUS_OUTPUT: program produced {0} images")]
    AmbiguousOutput(usize),
    #[error("produced image is unreadable: {0}")]
    BadImage(String),
    #[error("render io: {0}")]
    Io(#[from] std::io::Error),
}

impl RenderError {
    pub fn code(&self) -> &'static str {
        match self {
            RenderError::InvalidSpec(_) => "INVALID_SPEC",
            RenderError::RuntimeUnavailable(_) => "RUNTIME_UNAVAILABLE",
            RenderError::ProgramFailed { .. } => "PROGRAM_FAILED",
            RenderError::Timeout { .. } => "TIMEOUT",
            RenderError::NoOutput => "NO_OUTPUT",
            RenderError::AmbiguousOutput(_) => "AMBIGUOUS_OUTPUT",
            RenderError::BadImage(_) => "BAD_IMAGE",
            RenderError::Io(_) => "IO",
        }
    }
}

#[derive(Debug, Error)]
pub enum DiversifyError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

impl DiversifyError {
    pub fn is_budget(&self) -> bool {
        matches!(self, DiversifyError::Gateway(g) if g.is_budget())
    }
}

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("cannot aggregate an empty set of ratings")]
    Empty,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Error)]
pub enum QaError {
    #[error("figure {0} has not passed the quality filter")]
    NotRetained(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("cannot decode image {path}: {reason}")]
    Input { path: PathBuf, reason: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("feature extractor error: {0}")]
    Extractor(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("input error: {0}")]
    Input(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("figure {0} already present in manifest")]
    Conflict(String),
    #[error("figure {0} not found in manifest")]
    UnknownFigure(String),
    #[error("store at {0} is locked by another writer")]
    Locked(PathBuf),
    #[error("storage error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt record in {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("domain error: {0}")]
    Domain(String),
}

impl StoreError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        StoreError::Io { path: path.into(), source }
    }
}

/// Top-level error for pipeline orchestration.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("stage {stage} depends on {needs}: {detail}")]
    Dependency { stage: &'static str, needs: &'static str, detail: String },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("{0}")]
    Other(String),
}

impl PipelineError {
    /// Budget stops leave the store resumable; the CLI reports them with a
    /// distinct exit code.
    pub fn is_budget(&self) -> bool {
        match self {
            PipelineError::Budget(_) => true,
            PipelineError::Gateway(g) => g.is_budget(),
            _ => false,
        }
    }
}
