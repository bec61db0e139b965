//! Chat-completions client and the agent that wraps it.
//!
//! Requests are `POST {model, messages, temperature}` documents; the answer
//! is the first choice's message content. Transport failures, timeouts,
//! HTTP 429 and 5xx responses are retried with exponential backoff. Other
//! statuses fail immediately.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::PathBuf;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{parse_numeric_response, Agent, AgentResponse};
use crate::error::{Error, Result};
use crate::likelihoods::Observation;
use crate::numerics::RandomStream;
use crate::tasks::{render_prompt, Message, TaskSpec};

pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
pub const DEFAULT_API_KEY_ENV: &str = "OPENAI_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmAgentSpec {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub timeout_secs: f64,
    /// Transport-level retries per request.
    pub max_retries: u32,
    pub max_concurrent: usize,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    /// First backoff delay; doubles on each retry.
    pub backoff_secs: f64,
    /// Re-asks allowed per iteration step when an answer does not parse or
    /// falls outside the task bounds.
    pub response_retries: u32,
    /// When set, every exchange is appended to `llm_exchanges.jsonl` here.
    pub log_dir: Option<PathBuf>,
}

impl Default for LlmAgentSpec {
    fn default() -> Self {
        Self {
            endpoint: DEFAULT_ENDPOINT.into(),
            model: "gpt-4".into(),
            temperature: 1.0,
            timeout_secs: 60.0,
            max_retries: 5,
            max_concurrent: 8,
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            backoff_secs: 1.0,
            response_retries: 5,
            log_dir: None,
        }
    }
}

impl LlmAgentSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be non-negative, got {}",
                self.temperature
            )));
        }
        if self.timeout_secs.is_nan() || self.timeout_secs <= 0.0 || self.backoff_secs < 0.0 {
            return Err(Error::InvalidParameter(
                "timeout must be positive and backoff non-negative".into(),
            ));
        }
        if self.max_concurrent == 0 {
            return Err(Error::InvalidParameter("max_concurrent must be at least 1".into()));
        }
        Ok(())
    }
}

/// Counting semaphore capping in-flight requests.
#[derive(Debug)]
struct Limiter {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    /// HTTP attempts used, including the successful one.
    pub attempts: u32,
}

enum Failure {
    Retryable(Error),
    Fatal(Error),
}

#[derive(Debug)]
pub struct LlmClient {
    spec: LlmAgentSpec,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
    limiter: Limiter,
    log: Option<Mutex<File>>,
}

impl LlmClient {
    /// Reads the credential from `spec.api_key_env`; fails before any
    /// request is made when it is unset.
    pub fn from_env(spec: LlmAgentSpec) -> Result<Self> {
        let key = std::env::var(&spec.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| Error::MissingCredential(spec.api_key_env.clone()))?;
        Self::with_api_key(spec, Some(key))
    }

    pub fn with_api_key(spec: LlmAgentSpec, api_key: Option<String>) -> Result<Self> {
        spec.validate()?;
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(spec.timeout_secs))
            .build()
            .map_err(|e| Error::Transport {
                endpoint: spec.endpoint.clone(),
                message: e.to_string(),
            })?;
        let log = match &spec.log_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let f = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(dir.join("llm_exchanges.jsonl"))?;
                Some(Mutex::new(f))
            }
            None => None,
        };
        Ok(Self {
            limiter: Limiter::new(spec.max_concurrent),
            spec,
            api_key,
            http,
            log,
        })
    }

    pub fn spec(&self) -> &LlmAgentSpec {
        &self.spec
    }

    /// One chat completion, retried on transport errors and rate limits.
    pub fn complete(&self, messages: &[Message]) -> Result<Completion> {
        let _permit = self.limiter.acquire();
        let body = json!({
            "model": self.spec.model,
            "messages": messages,
            "temperature": self.spec.temperature,
        });
        let attempts_allowed = self.spec.max_retries + 1;
        let mut last = None;
        for attempt in 1..=attempts_allowed {
            let (outcome, retry_after) = self.send_once(&body);
            self.log_exchange(&body, attempt, &outcome);
            match outcome {
                Ok(text) => {
                    return Ok(Completion {
                        text,
                        attempts: attempt,
                    })
                }
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retryable(e)) => {
                    if attempt < attempts_allowed {
                        let backoff = self.spec.backoff_secs * f64::powi(2.0, attempt as i32 - 1);
                        let wait = retry_after.map_or(backoff, |r| r.max(backoff)).min(60.0);
                        std::thread::sleep(Duration::from_secs_f64(wait));
                    }
                    last = Some(e);
                }
            }
        }
        Err(Error::AgentFailure {
            attempts: attempts_allowed,
            reason: last.map_or_else(|| "no attempts made".into(), |e| e.to_string()),
            last_raw: None,
        })
    }

    fn send_once(&self, body: &serde_json::Value) -> (Result<String, Failure>, Option<f64>) {
        let endpoint = &self.spec.endpoint;
        let mut req = self.http.post(endpoint).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() => {
                return (
                    Err(Failure::Retryable(Error::Timeout {
                        endpoint: endpoint.clone(),
                    })),
                    None,
                )
            }
            Err(e) => {
                return (
                    Err(Failure::Retryable(Error::Transport {
                        endpoint: endpoint.clone(),
                        message: e.to_string(),
                    })),
                    None,
                )
            }
        };
        let status = resp.status();
        let retry_after = resp
            .headers()
            .get(reqwest::header::RETRY_AFTER)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<f64>().ok());
        let text = match resp.text() {
            Ok(t) => t,
            Err(e) => {
                let err = if e.is_timeout() {
                    Error::Timeout {
                        endpoint: endpoint.clone(),
                    }
                } else {
                    Error::Transport {
                        endpoint: endpoint.clone(),
                        message: e.to_string(),
                    }
                };
                return (Err(Failure::Retryable(err)), None);
            }
        };
        if !status.is_success() {
            let err = Error::HttpStatus {
                endpoint: endpoint.clone(),
                status: status.as_u16(),
                body: text.chars().take(500).collect(),
            };
            let retry = status.as_u16() == 429 || status.is_server_error();
            return (
                Err(if retry {
                    Failure::Retryable(err)
                } else {
                    Failure::Fatal(err)
                }),
                retry_after,
            );
        }
        let content = serde_json::from_str::<serde_json::Value>(&text)
            .ok()
            .and_then(|v| v["choices"][0]["message"]["content"].as_str().map(str::to_owned));
        match content {
            Some(c) => (Ok(c), None),
            None => (
                Err(Failure::Fatal(Error::Transport {
                    endpoint: endpoint.clone(),
                    message: format!(
                        "response has no choices[0].message.content: {}",
                        text.chars().take(200).collect::<String>()
                    ),
                })),
                None,
            ),
        }
    }

    fn log_exchange(&self, request: &serde_json::Value, attempt: u32, outcome: &Result<String, Failure>) {
        let Some(log) = &self.log else { return };
        let (response, error) = match outcome {
            Ok(t) => (Some(t.as_str()), None),
            Err(Failure::Retryable(e) | Failure::Fatal(e)) => (None, Some(e.to_string())),
        };
        let line = json!({
            "timestamp": chrono::Utc::now().to_rfc3339(),
            "attempt": attempt,
            "request": request,
            "response": response,
            "error": error,
        });
        let mut f = log.lock().unwrap();
        // Logging is best effort; a full disk must not abort a chain.
        let _ = writeln!(f, "{line}");
    }
}

/// An agent backed by a chat-completions endpoint.
///
/// Each question of a task prompt is sent as a fresh two-message
/// conversation. Answers that do not parse, or that fall outside the task
/// bounds, are re-asked until the per-step budget runs out; the agent then
/// fails rather than inventing a hypothesis.
#[derive(Debug)]
pub struct LlmAgent {
    client: LlmClient,
}

impl LlmAgent {
    pub fn new(client: LlmClient) -> Self {
        Self { client }
    }

    pub fn client(&self) -> &LlmClient {
        &self.client
    }
}

impl Agent for LlmAgent {
    fn respond(&self, task: &TaskSpec, d: &Observation, _rng: &mut RandomStream) -> Result<AgentResponse> {
        let prompt = render_prompt(task, d)?;
        let budget = self.client.spec.response_retries;
        let mut attempts = 0;
        let mut rejects = 0;
        let mut values = Vec::new();
        let mut raws = Vec::new();
        for conversation in prompt.conversations() {
            loop {
                let completion = self.client.complete(&conversation).map_err(|e| match e {
                    Error::AgentFailure {
                        attempts: a, reason, ..
                    } => Error::AgentFailure {
                        attempts: attempts + a,
                        reason,
                        last_raw: raws.last().cloned(),
                    },
                    other => Error::AgentFailure {
                        attempts: attempts + 1,
                        reason: other.to_string(),
                        last_raw: raws.last().cloned(),
                    },
                })?;
                attempts += completion.attempts;
                match parse_numeric_response(&completion.text, task.response_schema, task.response_bounds()) {
                    Ok(v) => {
                        values.extend(v);
                        raws.push(completion.text);
                        break;
                    }
                    Err(e) => {
                        rejects += 1;
                        if rejects > budget {
                            return Err(Error::AgentFailure {
                                attempts,
                                reason: e.to_string(),
                                last_raw: Some(completion.text),
                            });
                        }
                    }
                }
            }
        }
        let hypothesis = task.hypothesis_from_values(&values).map_err(|e| Error::AgentFailure {
            attempts,
            reason: e.to_string(),
            last_raw: raws.last().cloned(),
        })?;
        Ok(AgentResponse {
            hypothesis,
            raw_text: Some(raws.join("\n")),
            attempts,
            timestamp: Some(chrono::Utc::now().to_rfc3339()),
        })
    }

    fn max_concurrency(&self) -> Option<usize> {
        Some(self.client.spec.max_concurrent)
    }
}
