//! Uniform text-generation interface.
//!
//! A [`Generator`] turns a [`GenerationRequest`] into exactly `n` texts. The
//! remote kind speaks a minimal JSON protocol over HTTP; the mock kinds are
//! local, deterministic, and read the [`RequestMetadata`] that task modules
//! attach to each request (the remote kind never sends it).

pub mod clock;
mod mock;
pub mod rate_limit;
mod remote;
pub mod stub;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mock::{MockScript, ScriptedTask, EchoModel, OracleModel, ScriptedModel, NOISE_OUTPUT, ORACLE_DESCRIPTION};
pub use remote::{RemoteModel, WireRequest, WireResponse, API_KEY_ENV};

use clock::{Clock, SystemClock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
    /// Backward call fed the uninformative utterance instead of a forward sample.
    Baseline,
}

/// Side information for mock models. Never serialized onto the wire.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RequestMetadata {
    pub task_id: String,
    pub direction: Option<Direction>,
    /// Ground truth the backward call should reproduce.
    pub reference: Option<String>,
    /// Code the model is asked to transform, when the prompt contains one.
    pub source_code: Option<String>,
    /// Forward sample (or baseline utterance) a backward call is conditioned on.
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_output_chars: usize,
    pub n: usize,
    pub metadata: RequestMetadata,
}

impl GenerationRequest {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.n == 0 {
            return Err(GatewayError::InvalidRequest("n must be at least 1".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(GatewayError::InvalidRequest("temperature must be non-negative".into()));
        }
        if self.max_output_chars == 0 {
            return Err(GatewayError::InvalidRequest("max_output_chars must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("request failed after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String },
    #[error("mock model needs `{0}` in the request metadata")]
    MissingMetadata(&'static str),
    #[error("script: {0}")]
    Script(String),
}

pub trait Generator: Send + Sync {
    fn model_id(&self) -> &str;

    /// Returns exactly `request.n` texts, each at most `max_output_chars` long.
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<String>, GatewayError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Remote,
    MockOracle,
    MockEcho,
    MockScripted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model_id: String,
    pub endpoint_url: Option<String>,
    pub kind: ModelKind,
    pub max_concurrent_requests: usize,
    pub requests_per_minute: Option<u32>,
    pub retry_limit: u32,
    pub timeout_seconds: f64,
    /// First backoff delay; doubles on each retry.
    pub backoff_base_ms: u64,
    /// Scripted-mock script file.
    pub script_path: Option<PathBuf>,
    pub mock_seed: u64,
    /// Probability that a mock backward sample is replaced by [`NOISE_OUTPUT`].
    pub mock_noise: f64,
}

impl ModelSpec {
    pub fn mock(kind: ModelKind) -> Self {
        let model_id = match kind {
            ModelKind::MockOracle => "mock-oracle",
            ModelKind::MockEcho => "mock-echo",
            ModelKind::MockScripted => "mock-scripted",
            ModelKind::Remote => "remote",
        };
        Self {
            model_id: model_id.to_string(),
            endpoint_url: None,
            kind,
            max_concurrent_requests: 8,
            requests_per_minute: None,
            retry_limit: 3,
            timeout_seconds: 120.0,
            backoff_base_ms: 500,
            script_path: None,
            mock_seed: 0,
            mock_noise: 0.0,
        }
    }

    pub fn remote(model_id: impl Into<String>, endpoint_url: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            endpoint_url: Some(endpoint_url.into()),
            ..Self::mock(ModelKind::Remote)
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.kind == ModelKind::Remote && self.endpoint_url.is_none() {
            return Err(GatewayError::InvalidSpec("remote models need an endpoint_url".into()));
        }
        if self.kind == ModelKind::MockScripted && self.script_path.is_none() {
            return Err(GatewayError::InvalidSpec("scripted mock needs a script file".into()));
        }
        if self.max_concurrent_requests == 0 {
            return Err(GatewayError::InvalidSpec("max_concurrent_requests must be positive".into()));
        }
        if self.requests_per_minute == Some(0) {
            return Err(GatewayError::InvalidSpec("requests_per_minute must be positive".into()));
        }
        if !(self.timeout_seconds > 0.0) {
            return Err(GatewayError::InvalidSpec("timeout_seconds must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.mock_noise) {
            return Err(GatewayError::InvalidSpec("mock_noise must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn is_mock(&self) -> bool {
        self.kind != ModelKind::Remote
    }

    pub fn backoff_base(&self) -> Duration {
        Duration::from_millis(self.backoff_base_ms)
    }
}

pub fn build_generator(spec: &ModelSpec) -> Result<Arc<dyn Generator>, GatewayError> {
    build_generator_with_clock(spec, Arc::new(SystemClock::new()))
}

pub fn build_generator_with_clock(
    spec: &ModelSpec,
    clock: Arc<dyn Clock>,
) -> Result<Arc<dyn Generator>, GatewayError> {
    spec.validate()?;
    let generator: Arc<dyn Generator> = match spec.kind {
        ModelKind::Remote => Arc::new(RemoteModel::new(spec, clock)?),
        ModelKind::MockOracle => Arc::new(OracleModel::new(spec)),
        ModelKind::MockEcho => Arc::new(EchoModel::new(spec)),
        ModelKind::MockScripted => {
            let path = spec.script_path.as_ref().expect("validated");
            Arc::new(ScriptedModel::new(spec, MockScript::load(path)?))
        }
    };
    Ok(generator)
}
