//! Hit counts from a search endpoint that reports a total-result count.
//!
//! Requests are `GET <endpoint>?q=<query>[&key=<api key>]`. The response is
//! JSON carrying the count in `searchInformation.totalResults` (Custom Search
//! style) or in a top-level `totalResults`, `total_results` or `total` field,
//! as a number or a numeric string.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde_json::Value;

use super::provider::{HitProvider, ProviderError, ScaleBasis};
use super::WEB_WORDS_MULTIPLIER;

#[derive(Debug, Clone, PartialEq)]
pub struct WebConfig {
    pub endpoint: String,
    /// Name of the environment variable holding the API key, if any.
    pub api_key_env: Option<String>,
    pub requests_per_second: f64,
    pub max_attempts: u32,
    /// Delay before the first retry; doubles on each further attempt.
    pub initial_backoff: Duration,
    pub timeout: Duration,
    pub words_multiplier: f64,
    pub probe_term: String,
}

impl WebConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        WebConfig {
            endpoint: endpoint.into(),
            api_key_env: None,
            requests_per_second: 1.0,
            max_attempts: 5,
            initial_backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(30),
            words_multiplier: WEB_WORDS_MULTIPLIER,
            probe_term: "the".to_owned(),
        }
    }
}

pub struct WebProvider {
    config: WebConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
    next_slot: Mutex<Option<Instant>>,
}

impl std::fmt::Debug for WebProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WebProvider")
            .field("config", &self.config)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

/// Quotes multi-word phrases so the engine matches them as a unit.
pub(crate) fn phrase_query(phrase: &str) -> String {
    let phrase = phrase.split_whitespace().collect::<Vec<_>>().join(" ");
    if phrase.contains(' ') {
        format!("\"{phrase}\"")
    } else {
        phrase
    }
}

/// Query text for a phrase pair; independent of argument order.
pub(crate) fn pair_query(a: &str, b: &str) -> String {
    let (mut x, mut y) = (phrase_query(a), phrase_query(b));
    if y < x {
        std::mem::swap(&mut x, &mut y);
    }
    format!("{x} {y}")
}

fn count_field(v: &Value) -> Option<u64> {
    match v {
        Value::Number(n) => n.as_u64(),
        Value::String(s) => s.trim().replace(',', "").parse().ok(),
        _ => None,
    }
}

pub(crate) fn parse_total(body: &str) -> Result<u64, ProviderError> {
    let json: Value = serde_json::from_str(body)
        .map_err(|e| ProviderError::Protocol(format!("response is not JSON: {e}")))?;
    let candidates = [
        json.pointer("/searchInformation/totalResults"),
        json.get("totalResults"),
        json.get("total_results"),
        json.get("total"),
    ];
    let total = candidates.into_iter().flatten().find_map(count_field);
    total.ok_or_else(|| ProviderError::Protocol("no total-result count in response".into()))
}

fn is_transient(status: u16) -> bool {
    status == 429 || status == 408 || (500..600).contains(&status)
}

impl WebProvider {
    pub fn new(config: WebConfig) -> Result<Self, ProviderError> {
        if config.endpoint.trim().is_empty() {
            return Err(ProviderError::Config(
                "web provider needs an endpoint URL".into(),
            ));
        }
        if config.requests_per_second.is_nan() || config.requests_per_second <= 0.0 {
            return Err(ProviderError::Config("rate limit must be positive".into()));
        }
        if config.max_attempts == 0 {
            return Err(ProviderError::Config(
                "max attempts must be at least 1".into(),
            ));
        }
        let api_key = match &config.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                ProviderError::Config(format!("environment variable {var} is not set"))
            })?),
            None => None,
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        Ok(WebProvider {
            config,
            api_key,
            agent,
            next_slot: Mutex::new(None),
        })
    }

    pub fn config(&self) -> &WebConfig {
        &self.config
    }

    fn wait_for_slot(&self) {
        let interval = Duration::from_secs_f64(1.0 / self.config.requests_per_second);
        let mut slot = self.next_slot.lock().unwrap();
        let now = Instant::now();
        let start = match *slot {
            Some(t) if t > now => t,
            _ => now,
        };
        *slot = Some(start + interval);
        drop(slot);
        let wait = start.saturating_duration_since(now);
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }

    fn query(&self, q: &str) -> Result<u64, ProviderError> {
        let mut backoff = self.config.initial_backoff;
        let mut attempt = 0;
        loop {
            attempt += 1;
            self.wait_for_slot();
            let mut req = self.agent.get(&self.config.endpoint).query("q", q);
            if let Some(key) = &self.api_key {
                req = req.query("key", key);
            }
            let failure = match req.call() {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    if (200..300).contains(&status) {
                        let body = resp
                            .body_mut()
                            .read_to_string()
                            .map_err(|e| ProviderError::Protocol(e.to_string()))?;
                        return parse_total(&body);
                    }
                    if !is_transient(status) {
                        return Err(ProviderError::Http {
                            status,
                            attempts: attempt,
                        });
                    }
                    ProviderError::Http {
                        status,
                        attempts: attempt,
                    }
                }
                Err(e) => ProviderError::Transport {
                    message: e.to_string(),
                    attempts: attempt,
                },
            };
            if attempt >= self.config.max_attempts {
                return Err(failure);
            }
            log::debug!("retrying {q:?} after {failure}");
            std::thread::sleep(backoff);
            backoff = backoff.saturating_mul(2);
        }
    }
}

impl HitProvider for WebProvider {
    fn fingerprint(&self) -> String {
        format!(
            "web:{}:mult={}",
            self.config.endpoint, self.config.words_multiplier
        )
    }

    fn hits(&self, phrase: &str) -> Result<u64, ProviderError> {
        self.query(&phrase_query(phrase))
    }

    fn pair_hits(&self, a: &str, b: &str) -> Result<u64, ProviderError> {
        self.query(&pair_query(a, b))
    }

    fn scale_basis(&self) -> ScaleBasis {
        ScaleBasis::ProbeTerm(self.config.probe_term.clone())
    }

    fn words_multiplier(&self) -> f64 {
        self.config.words_multiplier
    }
}
