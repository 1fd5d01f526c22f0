//! HTTP client for the minimal generation protocol.
//!
//! Request body: `{"prompt", "temperature", "max_tokens", "n"}`.
//! Response body: `{"completions": [text, ...]}`.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::clock::Clock;
use super::rate_limit::RateLimiter;
use super::{GatewayError, GenerationRequest, Generator, ModelSpec};
use crate::sync::Semaphore;
use crate::text::truncate_at_boundary;

/// Environment variable holding the bearer token for the endpoint.
pub const API_KEY_ENV: &str = "RTC_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: usize,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    pub completions: Vec<String>,
}

impl WireRequest {
    pub fn from_request(request: &GenerationRequest) -> Self {
        Self {
            prompt: request.prompt.clone(),
            temperature: request.temperature,
            max_tokens: (request.max_output_chars / 2).max(1),
            n: request.n,
        }
    }
}

pub struct RemoteModel {
    model_id: String,
    url: String,
    agent: ureq::Agent,
    api_key: Option<String>,
    limiter: Option<RateLimiter>,
    inflight: Semaphore,
    retry_limit: u32,
    backoff_base: Duration,
    clock: Arc<dyn Clock>,
    dispatches: Mutex<Vec<Duration>>,
    greedy_seen: Mutex<HashMap<(String, usize), Vec<String>>>,
    greedy_mismatches: AtomicUsize,
}

impl RemoteModel {
    pub fn new(spec: &ModelSpec, clock: Arc<dyn Clock>) -> Result<Self, GatewayError> {
        let url = spec
            .endpoint_url
            .clone()
            .ok_or_else(|| GatewayError::InvalidSpec("remote models need an endpoint_url".into()))?;
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(spec.timeout_seconds)))
            .http_status_as_error(true)
            .build();
        Ok(Self {
            model_id: spec.model_id.clone(),
            url,
            agent: config.into(),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            limiter: spec
                .requests_per_minute
                .map(|rpm| RateLimiter::per_minute(rpm, clock.clone())),
            inflight: Semaphore::new(spec.max_concurrent_requests),
            retry_limit: spec.retry_limit,
            backoff_base: spec.backoff_base(),
            clock,
            dispatches: Mutex::new(Vec::new()),
            greedy_seen: Mutex::new(HashMap::new()),
            greedy_mismatches: AtomicUsize::new(0),
        })
    }

    /// Clock readings at which HTTP requests were dispatched, retries included.
    pub fn dispatch_times(&self) -> Vec<Duration> {
        self.dispatches.lock().expect("dispatch log poisoned").clone()
    }

    /// Greedy (temperature 0) requests that came back different from an
    /// earlier identical request.
    pub fn greedy_mismatches(&self) -> usize {
        self.greedy_mismatches.load(Ordering::Relaxed)
    }

    pub fn peak_inflight(&self) -> usize {
        self.inflight.peak()
    }

    fn send_once(&self, body: &WireRequest) -> Result<Vec<String>, String> {
        let granted = match &self.limiter {
            Some(limiter) => limiter.acquire(),
            None => self.clock.now(),
        };
        self.dispatches.lock().expect("dispatch log poisoned").push(granted);
        let mut call = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = call.send_json(body).map_err(|e| e.to_string())?;
        let parsed: WireResponse = response.body_mut().read_json().map_err(|e| e.to_string())?;
        if parsed.completions.len() != body.n {
            return Err(format!(
                "endpoint returned {} completions, expected {}",
                parsed.completions.len(),
                body.n
            ));
        }
        Ok(parsed.completions)
    }

    fn check_greedy(&self, request: &GenerationRequest, outputs: &[String]) {
        if request.temperature != 0.0 {
            return;
        }
        let key = (request.prompt.clone(), request.n);
        let mut seen = self.greedy_seen.lock().expect("greedy cache poisoned");
        match seen.get(&key) {
            Some(previous) if previous.as_slice() != outputs => {
                self.greedy_mismatches.fetch_add(1, Ordering::Relaxed);
                warn!("{}: identical greedy requests returned different texts", self.model_id);
            }
            Some(_) => {}
            None => {
                seen.insert(key, outputs.to_vec());
            }
        }
    }
}

impl Generator for RemoteModel {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn generate(&self, request: &GenerationRequest) -> Result<Vec<String>, GatewayError> {
        request.validate()?;
        let body = WireRequest::from_request(request);
        let _permit = self.inflight.acquire();
        let attempts = self.retry_limit + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                let delay = self.backoff_base * 2u32.saturating_pow(attempt - 1);
                debug!("{}: retry {attempt} after {delay:?}: {last}", self.model_id);
                self.clock.sleep(delay);
            }
            match self.send_once(&body) {
                Ok(completions) => {
                    let outputs: Vec<String> = completions
                        .iter()
                        .map(|c| truncate_at_boundary(c, request.max_output_chars))
                        .collect();
                    self.check_greedy(request, &outputs);
                    return Ok(outputs);
                }
                Err(e) => last = e,
            }
        }
        Err(GatewayError::Exhausted { attempts, last })
    }
}
