//! Deterministic local models for tests and dry runs.
//!
//! Every mock is a pure function of (prompt, metadata, seed, script): asking
//! twice gives the same texts.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Direction, GatewayError, GenerationRequest, Generator, ModelSpec};
use crate::text::truncate_at_boundary;

/// Canned forward output of the oracle mock.
pub const ORACLE_DESCRIPTION: &str = "Implements the marked code.";

/// Replacement text for a backward sample hit by injected noise.
pub const NOISE_OUTPUT: &str = "raise RuntimeError(\"perturbed sample\")";

/// Uniform draw in [0, 1) derived from (seed, prompt, sample index).
fn unit_draw(seed: u64, prompt: &str, index: usize) -> f64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((index as u64).to_le_bytes());
    hasher.update(prompt.as_bytes());
    let digest = hasher.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    // 53 high bits give an exactly representable fraction.
    (u64::from_le_bytes(word) >> 11) as f64 / (1u64 << 53) as f64
}

#[derive(Debug, Clone)]
struct Noise {
    probability: f64,
    seed: u64,
}

impl Noise {
    fn from_spec(spec: &ModelSpec) -> Self {
        Self {
            probability: spec.mock_noise,
            seed: spec.mock_seed,
        }
    }

    fn apply(&self, request: &GenerationRequest, outputs: Vec<String>) -> Vec<String> {
        if self.probability == 0.0 || request.metadata.direction == Some(Direction::Forward) {
            return outputs;
        }
        outputs
            .into_iter()
            .enumerate()
            .map(|(i, out)| {
                if unit_draw(self.seed, &request.prompt, i) < self.probability {
                    NOISE_OUTPUT.to_string()
                } else {
                    out
                }
            })
            .collect()
    }
}

fn finish(request: &GenerationRequest, outputs: Vec<String>) -> Vec<String> {
    outputs
        .into_iter()
        .map(|o| truncate_at_boundary(&o, request.max_output_chars))
        .collect()
}

/// Answers backward calls with the reference carried in the metadata and
/// forward calls with [`ORACLE_DESCRIPTION`]. Round trips through it score
/// the metric maximum, with or without an informative description.
pub struct OracleModel {
    model_id: String,
    noise: Noise,
}

impl OracleModel {
    pub fn new(spec: &ModelSpec) -> Self {
        Self {
            model_id: spec.model_id.clone(),
            noise: Noise::from_spec(spec),
        }
    }
}

impl Generator for OracleModel {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn generate(&self, request: &GenerationRequest) -> Result<Vec<String>, GatewayError> {
        request.validate()?;
        let text = match request.metadata.direction {
            Some(Direction::Forward) | None => ORACLE_DESCRIPTION.to_string(),
            Some(Direction::Backward) | Some(Direction::Baseline) => request
                .metadata
                .reference
                .clone()
                .ok_or(GatewayError::MissingMetadata("reference"))?,
        };
        let outputs = self.noise.apply(request, vec![text; request.n]);
        Ok(finish(request, outputs))
    }
}

/// Returns the code it was asked to transform unchanged, or the prompt
/// itself when the request carries no source code.
pub struct EchoModel {
    model_id: String,
}

impl EchoModel {
    pub fn new(spec: &ModelSpec) -> Self {
        Self {
            model_id: spec.model_id.clone(),
        }
    }
}

impl Generator for EchoModel {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn generate(&self, request: &GenerationRequest) -> Result<Vec<String>, GatewayError> {
        request.validate()?;
        let text = request
            .metadata
            .source_code
            .clone()
            .unwrap_or_else(|| request.prompt.clone());
        Ok(finish(request, vec![text; request.n]))
    }
}

/// Per-task script for [`ScriptedModel`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScriptedTask {
    /// Forward outputs, cycled when more samples are requested than listed.
    #[serde(default)]
    pub forward: Vec<String>,
    /// Backward outputs keyed by the description the call is conditioned on.
    #[serde(default)]
    pub backward: BTreeMap<String, Vec<String>>,
    /// Backward outputs for descriptions without an entry in `backward`.
    #[serde(default)]
    pub backward_default: Vec<String>,
    /// Outputs for baseline calls; falls back to the backward lookup.
    #[serde(default)]
    pub baseline: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MockScript {
    pub tasks: BTreeMap<String, ScriptedTask>,
}

impl MockScript {
    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::Script(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| GatewayError::Script(format!("{}: {e}", path.display())))
    }
}

fn cycle(list: &[String], n: usize) -> Option<Vec<String>> {
    if list.is_empty() {
        return None;
    }
    Some((0..n).map(|i| list[i % list.len()].clone()).collect())
}

/// Replays scripted outputs keyed on task id and direction.
pub struct ScriptedModel {
    model_id: String,
    script: MockScript,
    noise: Noise,
}

impl ScriptedModel {
    pub fn new(spec: &ModelSpec, script: MockScript) -> Self {
        Self {
            model_id: spec.model_id.clone(),
            script,
            noise: Noise::from_spec(spec),
        }
    }

    fn backward_for(&self, task: &ScriptedTask, description: Option<&str>, n: usize) -> Option<Vec<String>> {
        description
            .and_then(|d| task.backward.get(d.trim()))
            .and_then(|list| cycle(list, n))
            .or_else(|| cycle(&task.backward_default, n))
    }
}

impl Generator for ScriptedModel {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn generate(&self, request: &GenerationRequest) -> Result<Vec<String>, GatewayError> {
        request.validate()?;
        let meta = &request.metadata;
        let task = self
            .script
            .tasks
            .get(&meta.task_id)
            .ok_or_else(|| GatewayError::Script(format!("no script for task `{}`", meta.task_id)))?;
        let description = meta.description.as_deref();
        let outputs = match meta.direction {
            Some(Direction::Forward) | None => cycle(&task.forward, request.n),
            Some(Direction::Backward) => self.backward_for(task, description, request.n),
            Some(Direction::Baseline) => cycle(&task.baseline, request.n)
                .or_else(|| self.backward_for(task, description, request.n)),
        }
        .ok_or_else(|| {
            GatewayError::Script(format!(
                "task `{}` has no {:?} output for this request",
                meta.task_id,
                meta.direction.unwrap_or(Direction::Forward)
            ))
        })?;
        Ok(finish(request, self.noise.apply(request, outputs)))
    }
}
