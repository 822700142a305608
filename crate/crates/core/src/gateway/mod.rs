//! The one place that talks to a language model: prompt rendering, retries,
//! request budget, concurrency bound, audit log, and the stub backend.

mod live;
pub mod structured;
mod stub;
mod templates;

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use parking_lot::{Condvar, Mutex};
use serde::{Deserialize, Serialize};

pub use live::{LiveBackend, LiveConfig, API_KEY_ENV};
pub use structured::{
    first_code_block, parse_structured, parse_structured_text, ChartPayload, FigurePayload, QaItemPayload,
    QaListPayload, RatingPayload, SchemaId, StructuredPayload, VerdictLabel, VerdictPayload,
};
pub use stub::StubBackend;
pub use templates::{render_prompt, TemplateId};

use crate::error::{GatewayError, StructuredError};
use crate::util::sha256_hex;

/// Default number of transport attempts per request.
pub const DEFAULT_MAX_ATTEMPTS: u32 = 4;
/// Re-prompts allowed when a completion fails schema validation.
pub const STRUCTURED_TRIES: u32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRequest {
    pub template_id: TemplateId,
    pub slots: BTreeMap<String, String>,
    /// Image files attached to the prompt.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub images: Vec<PathBuf>,
    pub temperature: f64,
    pub max_attempts: u32,
}

impl PromptRequest {
    pub fn new(template_id: TemplateId) -> Self {
        Self {
            template_id,
            slots: BTreeMap::new(),
            images: Vec::new(),
            temperature: template_id.default_temperature(),
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }

    pub fn slot(mut self, name: &str, value: impl Into<String>) -> Self {
        self.slots.insert(name.to_string(), value.into());
        self
    }

    pub fn image(mut self, path: impl Into<PathBuf>) -> Self {
        self.images.push(path.into());
        self
    }

    pub fn prompt(&self) -> Result<String, GatewayError> {
        render_prompt(self.template_id, &self.slots)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Live,
    Stub,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub text: String,
    pub attempts_used: u32,
    pub backend: BackendKind,
    pub usage: Usage,
}

/// Outcome of one transport call, before retry handling.
#[derive(Debug, Clone, PartialEq)]
pub enum TransportError {
    /// Worth retrying; `retry_after` is the server's rate-limit hint.
    Retryable {
        cause: String,
        retry_after: Option<Duration>,
    },
    Fatal(String),
}

pub struct RawCompletion {
    pub text: String,
    pub usage: Usage,
}

pub trait Backend: Send + Sync {
    fn kind(&self) -> BackendKind;
    fn call(&self, request: &PromptRequest, prompt: &str) -> Result<RawCompletion, TransportError>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { base_delay: Duration::from_millis(500), max_delay: Duration::from_secs(30) }
    }
}

impl RetryPolicy {
    /// Delay before attempt `attempt + 1` (attempt counts from 1).
    pub fn delay(&self, attempt: u32, hint: Option<Duration>) -> Duration {
        let exp = self.base_delay.saturating_mul(1u32 << (attempt - 1).min(16));
        hint.unwrap_or(exp).min(self.max_delay)
    }
}

/// Counting semaphore bounding in-flight calls.
struct Limiter {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Limiter {
    fn new(n: usize) -> Self {
        Self { free: Mutex::new(n.max(1)), cv: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock();
        while *free == 0 {
            self.cv.wait(&mut free);
        }
        *free -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Limiter);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock() += 1;
        self.0.cv.notify_one();
    }
}

/// A prompt as sent, kept when capture is enabled.
#[derive(Debug, Clone, PartialEq)]
pub struct CapturedPrompt {
    pub template_id: TemplateId,
    pub prompt: String,
}

#[derive(Serialize)]
struct AuditRecord<'a> {
    template_id: TemplateId,
    backend: BackendKind,
    attempt: u32,
    prompt_digest: String,
    prompt: &'a str,
    images: &'a [PathBuf],
    temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    completion: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
}

pub struct Gateway {
    backend: Arc<dyn Backend>,
    limiter: Limiter,
    max_requests: Option<u64>,
    used: AtomicU64,
    retry: RetryPolicy,
    audit: Option<Mutex<File>>,
    capture: Option<Mutex<Vec<CapturedPrompt>>>,
}

impl Gateway {
    pub fn new(backend: Arc<dyn Backend>) -> Self {
        Self {
            backend,
            limiter: Limiter::new(4),
            max_requests: None,
            used: AtomicU64::new(0),
            retry: RetryPolicy::default(),
            audit: None,
            capture: None,
        }
    }

    pub fn stub(seed: u64) -> Self {
        Self::new(Arc::new(StubBackend::new(seed)))
    }

    pub fn with_concurrency(mut self, in_flight: usize) -> Self {
        self.limiter = Limiter::new(in_flight);
        self
    }

    /// Caps the number of backend calls this gateway will ever make.
    pub fn with_budget(mut self, max_requests: u64) -> Self {
        self.max_requests = Some(max_requests);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_audit_log(mut self, path: &Path) -> Result<Self, GatewayError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        self.audit = Some(Mutex::new(file));
        Ok(self)
    }

    pub fn with_capture(mut self) -> Self {
        self.capture = Some(Mutex::new(Vec::new()));
        self
    }

    pub fn backend_kind(&self) -> BackendKind {
        self.backend.kind()
    }

    /// Backend calls made so far (every attempt counts).
    pub fn requests_made(&self) -> u64 {
        self.used.load(Ordering::SeqCst)
    }

    pub fn captured(&self) -> Vec<CapturedPrompt> {
        self.capture.as_ref().map(|c| c.lock().clone()).unwrap_or_default()
    }

    fn take_budget(&self) -> Result<(), GatewayError> {
        match self.max_requests {
            None => {
                self.used.fetch_add(1, Ordering::SeqCst);
                Ok(())
            }
            Some(limit) => self
                .used
                .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |u| (u < limit).then_some(u + 1))
                .map(|_| ())
                .map_err(|_| GatewayError::BudgetExhausted { limit }),
        }
    }

    pub fn complete(&self, request: &PromptRequest) -> Result<CompletionResult, GatewayError> {
        if !(0.0..=2.0).contains(&request.temperature) {
            return Err(GatewayError::Config(format!("temperature {} outside [0, 2]", request.temperature)));
        }
        let max_attempts = request.max_attempts.max(1);
        let prompt = request.prompt()?;
        if let Some(c) = &self.capture {
            c.lock().push(CapturedPrompt { template_id: request.template_id, prompt: prompt.clone() });
        }
        let mut last_cause = String::new();
        for attempt in 1..=max_attempts {
            self.take_budget()?;
            let outcome = {
                let _permit = self.limiter.acquire();
                self.backend.call(request, &prompt)
            };
            match outcome {
                Ok(raw) => {
                    self.audit(request, &prompt, attempt, Some(&raw.text), None)?;
                    return Ok(CompletionResult {
                        text: raw.text,
                        attempts_used: attempt,
                        backend: self.backend.kind(),
                        usage: raw.usage,
                    });
                }
                Err(TransportError::Fatal(cause)) => {
                    self.audit(request, &prompt, attempt, None, Some(&cause))?;
                    return Err(GatewayError::AttemptsExhausted { attempts: attempt, cause });
                }
                Err(TransportError::Retryable { cause, retry_after }) => {
                    self.audit(request, &prompt, attempt, None, Some(&cause))?;
                    log::warn!("{} attempt {attempt}/{max_attempts} failed: {cause}", request.template_id);
                    if attempt < max_attempts {
                        std::thread::sleep(self.retry.delay(attempt, retry_after));
                    }
                    last_cause = cause;
                }
            }
        }
        Err(GatewayError::AttemptsExhausted { attempts: max_attempts, cause: last_cause })
    }

    fn audit(
        &self,
        request: &PromptRequest,
        prompt: &str,
        attempt: u32,
        completion: Option<&str>,
        error: Option<&str>,
    ) -> Result<(), GatewayError> {
        let Some(file) = &self.audit else { return Ok(()) };
        let record = AuditRecord {
            template_id: request.template_id,
            backend: self.backend.kind(),
            attempt,
            prompt_digest: sha256_hex(prompt),
            prompt,
            images: &request.images,
            temperature: request.temperature,
            completion,
            error,
        };
        let mut line = serde_json::to_string(&record).expect("audit record serializes");
        line.push('\n');
        file.lock().write_all(line.as_bytes())?;
        Ok(())
    }
}

/// Why a structured request failed for good.
#[derive(Debug, thiserror::Error)]
pub enum StructuredFailure {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("no valid payload after {tries} tries: {last}")]
    Invalid { tries: u32, last: StructuredError },
}

impl StructuredFailure {
    pub fn is_budget(&self) -> bool {
        matches!(self, StructuredFailure::Gateway(g) if g.is_budget())
    }
}

/// Issues `request` until the completion parses against `schema`, up to
/// `max_tries` times.
pub fn request_structured(
    gateway: &Gateway,
    request: &PromptRequest,
    schema: SchemaId,
    max_tries: u32,
) -> Result<(StructuredPayload, CompletionResult), StructuredFailure> {
    let mut last = StructuredError::NoBlock;
    let tries = max_tries.max(1);
    for _ in 0..tries {
        let completion = gateway.complete(request)?;
        match parse_structured(&completion, schema) {
            Ok(p) => return Ok((p, completion)),
            Err(e) => {
                log::debug!("{} payload rejected: {e}", request.template_id);
                last = e;
            }
        }
    }
    Err(StructuredFailure::Invalid { tries, last })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;

    struct Flaky {
        fail_first: usize,
        calls: AtomicUsize,
        fatal: bool,
    }

    impl Backend for Flaky {
        fn kind(&self) -> BackendKind {
            BackendKind::Live
        }
        fn call(&self, _: &PromptRequest, _: &str) -> Result<RawCompletion, TransportError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.fail_first {
                if self.fatal {
                    return Err(TransportError::Fatal("400 bad request".into()));
                }
                return Err(TransportError::Retryable { cause: format!("boom {n}"), retry_after: None });
            }
            Ok(RawCompletion { text: "ok".into(), usage: Usage::default() })
        }
    }

    fn judge_request() -> PromptRequest {
        PromptRequest::new(TemplateId::EvalJudge)
            .slot("question", "q")
            .slot("ground_truth", "1")
            .slot("prediction", "1")
            .slot("tolerance_pct", "5")
    }

    fn fast() -> RetryPolicy {
        RetryPolicy { base_delay: Duration::from_millis(1), max_delay: Duration::from_millis(5) }
    }

    #[test]
    fn retries_transient_failures() {
        let backend = Arc::new(Flaky { fail_first: 2, calls: AtomicUsize::new(0), fatal: false });
        let gw = Gateway::new(backend).with_retry(fast());
        let out = gw.complete(&judge_request()).unwrap();
        assert_eq!(out.attempts_used, 3);
        assert_eq!(gw.requests_made(), 3);
    }

    #[test]
    fn gives_up_after_max_attempts_with_last_cause() {
        let backend = Arc::new(Flaky { fail_first: 100, calls: AtomicUsize::new(0), fatal: false });
        let gw = Gateway::new(backend).with_retry(fast());
        let mut req = judge_request();
        req.max_attempts = 3;
        match gw.complete(&req) {
            Err(GatewayError::AttemptsExhausted { attempts, cause }) => {
                assert_eq!(attempts, 3);
                assert_eq!(cause, "boom 2");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fatal_errors_are_not_retried() {
        let backend = Arc::new(Flaky { fail_first: 1, calls: AtomicUsize::new(0), fatal: true });
        let gw = Gateway::new(backend).with_retry(fast());
        assert!(matches!(gw.complete(&judge_request()), Err(GatewayError::AttemptsExhausted { attempts: 1, .. })));
    }

    #[test]
    fn budget_is_a_hard_cap() {
        let gw = Gateway::stub(1).with_budget(2);
        gw.complete(&judge_request()).unwrap();
        gw.complete(&judge_request()).unwrap();
        let err = gw.complete(&judge_request()).unwrap_err();
        assert!(err.is_budget());
        assert_eq!(gw.requests_made(), 2);
    }

    #[test]
    fn missing_slot_fails_before_any_call() {
        let gw = Gateway::stub(1);
        let req = PromptRequest::new(TemplateId::EvalJudge).slot("question", "q");
        assert!(matches!(gw.complete(&req), Err(GatewayError::MissingSlot { .. })));
        assert_eq!(gw.requests_made(), 0);
    }

    #[test]
    fn backoff_grows_and_honours_hint() {
        let p = RetryPolicy { base_delay: Duration::from_millis(100), max_delay: Duration::from_secs(1) };
        assert_eq!(p.delay(1, None), Duration::from_millis(100));
        assert_eq!(p.delay(3, None), Duration::from_millis(400));
        assert_eq!(p.delay(9, None), Duration::from_secs(1));
        assert_eq!(p.delay(1, Some(Duration::from_millis(700))), Duration::from_millis(700));
    }

    #[test]
    fn limiter_bounds_in_flight_calls() {
        struct Probe {
            now: AtomicUsize,
            peak: AtomicUsize,
        }
        impl Backend for Probe {
            fn kind(&self) -> BackendKind {
                BackendKind::Stub
            }
            fn call(&self, _: &PromptRequest, _: &str) -> Result<RawCompletion, TransportError> {
                let n = self.now.fetch_add(1, Ordering::SeqCst) + 1;
                self.peak.fetch_max(n, Ordering::SeqCst);
                std::thread::sleep(Duration::from_millis(5));
                self.now.fetch_sub(1, Ordering::SeqCst);
                Ok(RawCompletion { text: String::new(), usage: Usage::default() })
            }
        }
        let probe = Arc::new(Probe { now: AtomicUsize::new(0), peak: AtomicUsize::new(0) });
        let gw = Gateway::new(probe.clone()).with_concurrency(2);
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| gw.complete(&judge_request()).unwrap());
            }
        });
        assert!(probe.peak.load(Ordering::SeqCst) <= 2);
    }

    #[test]
    fn audit_log_records_every_attempt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("audit/log.jsonl");
        let gw = Gateway::stub(3).with_audit_log(&path).unwrap();
        gw.complete(&judge_request()).unwrap();
        gw.complete(&judge_request()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0]["template_id"], "eval_judge");
        assert!(lines[0]["completion"].is_string());
    }
}
