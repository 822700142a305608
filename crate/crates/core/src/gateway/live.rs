//! HTTP backend speaking the chat-completions wire format.

use std::time::Duration;

use base64::Engine;
use serde_json::{json, Value};

use super::{Backend, BackendKind, PromptRequest, RawCompletion, TransportError, Usage};
use crate::error::GatewayError;

/// Environment variable holding the API key.
pub const API_KEY_ENV: &str = "CHARTFORGE_API_KEY";

#[derive(Debug, Clone, PartialEq)]
pub struct LiveConfig {
    /// Full chat-completions URL.
    pub endpoint: String,
    pub model: String,
    pub api_key: String,
    pub timeout: Duration,
}

impl LiveConfig {
    /// Reads the key from the environment; a missing key is a config error.
    pub fn from_env(endpoint: &str, model: &str) -> Result<Self, GatewayError> {
        let api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.trim().is_empty()).ok_or_else(|| {
            GatewayError::Config(format!("live backend needs the {API_KEY_ENV} environment variable"))
        })?;
        Ok(Self {
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            api_key,
            timeout: Duration::from_secs(120),
        })
    }
}

pub struct LiveBackend {
    config: LiveConfig,
    agent: ureq::Agent,
}

impl LiveBackend {
    pub fn new(config: LiveConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, agent }
    }

    fn body(&self, request: &PromptRequest, prompt: &str) -> Result<Value, TransportError> {
        let mut content = vec![json!({"type": "text", "text": prompt})];
        for path in &request.images {
            let bytes = std::fs::read(path)
                .map_err(|e| TransportError::Fatal(format!("cannot read image {}: {e}", path.display())))?;
            let data = base64::engine::general_purpose::STANDARD.encode(bytes);
            content.push(json!({"type": "image_url", "image_url": {"url": format!("data:image/png;base64,{data}")}}));
        }
        Ok(json!({
            "model": self.config.model,
            "temperature": request.temperature,
            "messages": [{"role": "user", "content": content}],
        }))
    }
}

impl Backend for LiveBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Live
    }

    fn call(&self, request: &PromptRequest, prompt: &str) -> Result<RawCompletion, TransportError> {
        let body = self.body(request, prompt)?;
        let mut resp = self
            .agent
            .post(&self.config.endpoint)
            .header("Authorization", &format!("Bearer {}", self.config.api_key))
            .send_json(&body)
            .map_err(|e| TransportError::Retryable { cause: e.to_string(), retry_after: None })?;
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            let retry_after = resp
                .headers()
                .get("retry-after")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<u64>().ok())
                .map(Duration::from_secs);
            return Err(TransportError::Retryable { cause: format!("HTTP {status}"), retry_after });
        }
        if status >= 400 {
            let detail = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(TransportError::Fatal(format!("HTTP {status}: {detail}")));
        }
        let value: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| TransportError::Retryable { cause: format!("bad response body: {e}"), retry_after: None })?;
        let text = value["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| TransportError::Retryable {
                cause: "response has no message content".into(),
                retry_after: None,
            })?
            .to_string();
        let usage = Usage {
            prompt_tokens: value["usage"]["prompt_tokens"].as_u64().unwrap_or(0),
            completion_tokens: value["usage"]["completion_tokens"].as_u64().unwrap_or(0),
        };
        Ok(RawCompletion { text, usage })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{Gateway, RetryPolicy, TemplateId};
    use std::sync::Arc;

    #[test]
    fn endpoint_down_exhausts_attempts() {
        // Port 9 on loopback has no listener in the sandbox.
        let cfg = LiveConfig {
            endpoint: "http://127.0.0.1:9/v1/chat/completions".into(),
            model: "m".into(),
            api_key: "k".into(),
            timeout: Duration::from_secs(2),
        };
        let gw = Gateway::new(Arc::new(LiveBackend::new(cfg)))
            .with_retry(RetryPolicy { base_delay: Duration::from_millis(1), max_delay: Duration::from_millis(2) });
        let mut req = PromptRequest::new(TemplateId::EvalJudge)
            .slot("question", "q")
            .slot("ground_truth", "1")
            .slot("prediction", "1")
            .slot("tolerance_pct", "5");
        req.max_attempts = 3;
        match gw.complete(&req) {
            Err(GatewayError::AttemptsExhausted { attempts, .. }) => assert_eq!(attempts, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
