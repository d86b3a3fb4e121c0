//! Chat-completion client over HTTP JSON.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{ModelSpec, Provider, ProviderError, SamplingPolicy};
use crate::scenario::PromptInstance;

/// Per-provider request template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RequestShape {
    pub auth_header: String,
    pub auth_prefix: String,
    /// Body key for the output token limit (some APIs use
    /// `max_completion_tokens`).
    pub max_tokens_field: String,
    /// JSON pointer to the completion text in the response body.
    pub response_pointer: String,
    /// Extra static headers.
    pub headers: BTreeMap<String, String>,
    /// Extra static body fields, merged last.
    pub extra_body: BTreeMap<String, Value>,
}

impl Default for RequestShape {
    fn default() -> Self {
        RequestShape {
            auth_header: "Authorization".into(),
            auth_prefix: "Bearer ".into(),
            max_tokens_field: "max_tokens".into(),
            response_pointer: "/choices/0/message/content".into(),
            headers: BTreeMap::new(),
            extra_body: BTreeMap::new(),
        }
    }
}

/// Token bucket: capacity `max(1, rate)`, refilled continuously at `rate`
/// tokens per second.
#[derive(Debug)]
pub struct TokenBucket {
    rate: f64,
    capacity: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    pub fn new(rate: f64) -> Self {
        let capacity = rate.max(1.0);
        TokenBucket { rate, capacity, state: Mutex::new((capacity, Instant::now())) }
    }

    pub fn acquire(&self) {
        if !self.rate.is_finite() || self.rate <= 0.0 {
            return;
        }
        loop {
            let wait = {
                let mut guard = self.state.lock().expect("rate limiter poisoned");
                let (tokens, last) = &mut *guard;
                let now = Instant::now();
                *tokens = (*tokens + now.duration_since(*last).as_secs_f64() * self.rate).min(self.capacity);
                *last = now;
                if *tokens >= 1.0 {
                    *tokens -= 1.0;
                    return;
                }
                (1.0 - *tokens) / self.rate
            };
            thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

pub struct HttpProvider {
    endpoint: String,
    model: String,
    max_tokens: u32,
    shape: RequestShape,
    api_key: Option<String>,
    agent: ureq::Agent,
    bucket: TokenBucket,
}

impl HttpProvider {
    /// Reads the API key from the environment variable named in `spec`.
    pub fn new(spec: &ModelSpec, policy: &SamplingPolicy) -> Result<Self, ProviderError> {
        if !(spec.endpoint.starts_with("http://") || spec.endpoint.starts_with("https://")) {
            return Err(ProviderError::Config(format!(
                "{}: endpoint `{}` is neither a URL nor the mock tag",
                spec.model_id, spec.endpoint
            )));
        }
        let api_key = match &spec.auth_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                ProviderError::Config(format!("{}: environment variable {var} is not set", spec.model_id))
            })?),
            None => None,
        };
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(policy.timeout_secs)))
            .http_status_as_error(false)
            .build();
        Ok(HttpProvider {
            endpoint: spec.endpoint.clone(),
            model: spec.api_model.clone().unwrap_or_else(|| spec.model_id.clone()),
            max_tokens: policy.max_tokens,
            shape: spec.request.clone(),
            api_key,
            agent: ureq::Agent::new_with_config(config),
            bucket: TokenBucket::new(policy.requests_per_second),
        })
    }

    /// Request body for one sample. Only the prompt text and temperature
    /// vary between calls.
    pub fn request_body(&self, prompt: &PromptInstance, temperature: Option<f64>) -> Value {
        let mut body = Map::new();
        body.insert("model".into(), json!(self.model));
        body.insert("messages".into(), json!([{ "role": "user", "content": prompt.full_text }]));
        body.insert(self.shape.max_tokens_field.clone(), json!(self.max_tokens));
        if let Some(t) = temperature {
            body.insert("temperature".into(), json!(t));
        }
        for (k, v) in &self.shape.extra_body {
            body.insert(k.clone(), v.clone());
        }
        Value::Object(body)
    }
}

fn classify_status(status: u16, body: &str) -> ProviderError {
    let snippet: String = body.chars().take(200).collect();
    match status {
        408 | 429 | 500..=599 => ProviderError::Transport(format!("HTTP {status}: {snippet}")),
        _ => ProviderError::Fatal(format!("HTTP {status}: {snippet}")),
    }
}

impl Provider for HttpProvider {
    fn complete(
        &self,
        prompt: &PromptInstance,
        temperature: Option<f64>,
        _draw_index: u32,
    ) -> Result<String, ProviderError> {
        self.bucket.acquire();
        let mut req = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            req = req.header(&self.shape.auth_header, format!("{}{key}", self.shape.auth_prefix));
        }
        for (k, v) in &self.shape.headers {
            req = req.header(k, v);
        }
        let resp = req
            .send_json(self.request_body(prompt, temperature))
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.into_body().read_to_string().map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(classify_status(status, &text));
        }
        let parsed: Value = serde_json::from_str(&text)
            .map_err(|e| ProviderError::Transport(format!("response body is not JSON: {e}")))?;
        match parsed.pointer(&self.shape.response_pointer) {
            Some(Value::String(s)) => Ok(s.clone()),
            other => {
                log::warn!(
                    "{}: no completion text at {} ({}); recording an empty completion",
                    self.model,
                    self.shape.response_pointer,
                    other.map(|v| v.to_string()).unwrap_or_else(|| "missing".into())
                );
                Ok(String::new())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::{Origin, ReasoningMode, Tier};
    use crate::scenario::{render_prompt, Domain, Frame, Scenario};
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::mpsc;

    /// Serves one canned response per entry and reports each request body.
    fn serve(responses: Vec<(u16, String)>) -> (String, mpsc::Receiver<(String, String)>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for (status, body) in responses {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut headers = String::new();
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    headers.push_str(&line);
                }
                let mut buf = vec![0; len];
                reader.read_exact(&mut buf).unwrap();
                tx.send((headers, String::from_utf8(buf).unwrap())).unwrap();
                let mut stream = stream;
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
        });
        (format!("http://{addr}/v1/chat/completions"), rx)
    }

    fn spec(endpoint: &str, supports_temperature: bool) -> ModelSpec {
        ModelSpec {
            model_id: "test-model".into(),
            origin: Origin::Oss,
            tier: Tier::Small,
            endpoint: endpoint.into(),
            supports_temperature,
            reasoning_mode: ReasoningMode::None,
            family: None,
            auth_env: Some("SVI_TEST_HTTP_KEY".into()),
            api_model: None,
            request: RequestShape::default(),
            mock: None,
        }
    }

    fn policy() -> SamplingPolicy {
        SamplingPolicy { requests_per_second: 1000.0, timeout_secs: 5, ..SamplingPolicy::default() }
    }

    fn prompt() -> PromptInstance {
        let s = Scenario::new("s", Domain::Law, "Some text.", "They", "act", "win");
        render_prompt(&s, Frame::F1).unwrap()
    }

    fn completion(text: &str) -> String {
        json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string()
    }

    #[test]
    fn stateless_single_turn_requests() {
        std::env::set_var("SVI_TEST_HTTP_KEY", "k-123");
        let (url, rx) = serve(vec![(200, completion("first")), (200, completion("second"))]);
        let sp = spec(&url, true);
        let provider = HttpProvider::new(&sp, &policy()).unwrap();
        let p = prompt();
        assert_eq!(provider.complete(&p, Some(0.7), 0).unwrap(), "first");
        assert_eq!(provider.complete(&p, Some(0.7), 1).unwrap(), "second");
        let (h1, b1) = rx.recv().unwrap();
        let (_, b2) = rx.recv().unwrap();
        assert_eq!(b1, b2);
        assert!(h1.to_ascii_lowercase().contains("authorization: bearer k-123"));
        let body: Value = serde_json::from_str(&b1).unwrap();
        let msgs = body["messages"].as_array().unwrap();
        assert_eq!(msgs.len(), 1);
        assert_eq!(msgs[0]["role"], "user");
        assert_eq!(msgs[0]["content"], p.full_text.as_str());
        assert_eq!(body["temperature"], 0.7);
    }

    #[test]
    fn temperature_omitted_for_provider_default() {
        std::env::set_var("SVI_TEST_HTTP_KEY", "k");
        let (url, rx) = serve(vec![(200, completion("x"))]);
        let sp = spec(&url, false);
        let pol = policy();
        let provider = HttpProvider::new(&sp, &pol).unwrap();
        provider.complete(&prompt(), pol.temperature_for(&sp), 0).unwrap();
        let (_, body) = rx.recv().unwrap();
        let body: Value = serde_json::from_str(&body).unwrap();
        assert!(body.get("temperature").is_none());
    }

    #[test]
    fn status_classification() {
        std::env::set_var("SVI_TEST_HTTP_KEY", "k");
        let (url, _rx) = serve(vec![(429, "{}".into()), (503, "{}".into()), (401, "{}".into())]);
        let provider = HttpProvider::new(&spec(&url, true), &policy()).unwrap();
        let p = prompt();
        assert!(matches!(provider.complete(&p, None, 0), Err(ProviderError::Transport(_))));
        assert!(matches!(provider.complete(&p, None, 0), Err(ProviderError::Transport(_))));
        assert!(matches!(provider.complete(&p, None, 0), Err(ProviderError::Fatal(_))));
    }

    #[test]
    fn retries_then_succeeds_over_http() {
        std::env::set_var("SVI_TEST_HTTP_KEY", "k");
        let (url, _rx) = serve(vec![(500, "{}".into()), (200, completion("ok"))]);
        let sp = spec(&url, true);
        let pol = SamplingPolicy { backoff_ms: 1, ..policy() };
        let provider = HttpProvider::new(&sp, &pol).unwrap();
        let out = crate::providers::sample_decision(&sp, &provider, &prompt(), &pol, 0).unwrap();
        assert_eq!(out, "ok");
    }

    #[test]
    fn missing_key_is_config_error() {
        let mut sp = spec("http://127.0.0.1:9/", true);
        sp.auth_env = Some("SVI_TEST_DEFINITELY_UNSET".into());
        assert!(matches!(HttpProvider::new(&sp, &policy()), Err(ProviderError::Config(_))));
        sp.endpoint = "ftp://x".into();
        sp.auth_env = None;
        assert!(matches!(HttpProvider::new(&sp, &policy()), Err(ProviderError::Config(_))));
    }

    #[test]
    fn bucket_paces_requests() {
        let bucket = TokenBucket::new(20.0);
        let start = Instant::now();
        for _ in 0..30 {
            bucket.acquire();
        }
        // 20 tokens up front, 10 more at 20/s.
        assert!(start.elapsed() >= Duration::from_millis(400));
    }
}
