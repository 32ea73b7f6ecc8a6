//! Sources of level logits: a replay file, a remote inference service, or a
//! synthetic mock model.
//!
//! Every source answers a batch of [`LogitRequest`]s with one result per
//! request, in request order.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::decode::LevelLogits;
use crate::scalar::Scalar;
use crate::level::{RatingLevel, ScoreRange, LEVEL_COUNT};
use crate::wire::NamedLevels;

/// Environment variable that overrides the remote endpoint.
pub const ENDPOINT_ENV: &str = "QALIGN_ENDPOINT";
/// Logit given to levels the mock model puts no mass on. `exp` of it underflows to zero.
pub const MOCK_FLOOR_LOGIT: f64 = -1000.0;

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("item {0}: not present in replay file")]
    MissingId(String),
    #[error("item {0}: no mock target score")]
    MissingTarget(String),
    #[error("item {id}: transport failure after {attempts} attempts: {message}")]
    Transport { id: String, attempts: u32, message: String },
    #[error("item {id}: server answered with status {status}")]
    Status { id: String, status: u16 },
    #[error("item {id}: malformed response: {message}")]
    Protocol { id: String, message: String },
    #[error("replay line {line}: {message}")]
    Replay { line: usize, message: String },
    #[error("invalid provider configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub timeout: Duration,
    pub max_inflight: usize,
    /// Extra attempts after the first on transport failures.
    pub retries: u32,
    /// Delay before the first retry; doubled for each further one.
    pub backoff: Duration,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout: Duration::from_secs(30),
            max_inflight: 4,
            retries: 2,
            backoff: Duration::from_millis(100),
        }
    }

    /// Uses `$QALIGN_ENDPOINT` when set, otherwise `fallback`.
    pub fn from_env_or(fallback: Option<String>) -> Result<Self, ProviderError> {
        std::env::var(ENDPOINT_ENV)
            .ok()
            .filter(|s| !s.is_empty())
            .or(fallback)
            .map(Self::new)
            .ok_or_else(|| ProviderError::Config(format!("no endpoint given and ${ENDPOINT_ENV} unset")))
    }

    fn validate(&self) -> Result<(), ProviderError> {
        if self.timeout.is_zero() {
            return Err(ProviderError::Config("timeout must be positive".into()));
        }
        if self.max_inflight == 0 {
            return Err(ProviderError::Config("max_inflight must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProviderConfig {
    Replay { path: PathBuf },
    Remote(RemoteConfig),
    /// Synthetic model; `targets` maps item ids to scores on the canonical `[1, 5]` scale.
    Mock {
        noise_scale: f64,
        seed: u64,
        targets: HashMap<String, f64>,
    },
}

/// Request body sent to a remote provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitRequest {
    pub id: String,
    pub prompt: String,
    pub media: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogitResponse {
    pub id: String,
    pub logits: LevelLogits<f64>,
}

impl LogitResponse {
    /// Line-delimited form shared by replay files and remote responses.
    pub fn to_json(&self) -> Value {
        let values = self.logits.values().map(|v| v.unwrap_or(MOCK_FLOOR_LOGIT));
        serde_json::json!({ "id": self.id, "logits": NamedLevels::from_ascending(values) })
    }
}

/// Parses a `logits` object holding exactly the five level names.
pub fn parse_level_logits(value: &Value) -> Result<LevelLogits<f64>, String> {
    let object = value.as_object().ok_or("logits must be an object")?;
    if object.len() != LEVEL_COUNT {
        return Err(format!("expected {LEVEL_COUNT} level logits, got {}", object.len()));
    }
    let pairs = object
        .iter()
        .map(|(name, v)| {
            let level: RatingLevel = name.parse().map_err(|e: crate::Error| e.to_string())?;
            let logit = v.as_f64().ok_or_else(|| format!("logit for {name} is not a number"))?;
            Ok((level, logit))
        })
        .collect::<Result<Vec<_>, String>>()?;
    LevelLogits::from_pairs(pairs).map_err(|e| e.to_string())
}

fn parse_response_body(body: &Value) -> Result<(String, LevelLogits<f64>), String> {
    let id = body
        .get("id")
        .and_then(Value::as_str)
        .ok_or("missing string field \"id\"")?;
    let logits = body.get("logits").ok_or("missing field \"logits\"")?;
    Ok((id.to_owned(), parse_level_logits(logits)?))
}

/// Reads a replay file in file order. Unknown fields are ignored; ids must be unique.
pub fn read_replay(path: impl AsRef<Path>) -> Result<Vec<LogitResponse>, ProviderError> {
    parse_replay(&std::fs::read_to_string(path)?)
}

pub fn parse_replay(text: &str) -> Result<Vec<LogitResponse>, ProviderError> {
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| ProviderError::Replay { line: i + 1, message };
        let value: Value = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let (id, logits) = parse_response_body(&value).map_err(err)?;
        if seen.insert(id.clone(), i + 1).is_some() {
            return Err(err(format!("duplicate id {id:?}")));
        }
        out.push(LogitResponse { id, logits });
    }
    Ok(out)
}

/// Fetches level logits for every request, returning results in request order.
///
/// The outer error covers configuration problems (unreadable replay file,
/// invalid remote settings); per-item failures are reported in place.
pub fn fetch_logits(
    config: &ProviderConfig,
    requests: &[LogitRequest],
) -> Result<Vec<Result<LogitResponse, ProviderError>>, ProviderError> {
    match config {
        ProviderConfig::Replay { path } => {
            let table: HashMap<String, LevelLogits<f64>> =
                read_replay(path)?.into_iter().map(|r| (r.id, r.logits)).collect();
            Ok(requests
                .iter()
                .map(|req| {
                    table
                        .get(&req.id)
                        .map(|&logits| LogitResponse { id: req.id.clone(), logits })
                        .ok_or_else(|| ProviderError::MissingId(req.id.clone()))
                })
                .collect())
        }
        ProviderConfig::Remote(remote) => {
            remote.validate()?;
            Ok(fetch_remote(remote, requests))
        }
        ProviderConfig::Mock { noise_scale, seed, targets } => {
            if !(noise_scale.is_finite() && *noise_scale >= 0.0) {
                return Err(ProviderError::Config("mock noise must be finite and non-negative".into()));
            }
            Ok(requests
                .iter()
                .enumerate()
                .map(|(i, req)| {
                    let target = *targets
                        .get(&req.id)
                        .ok_or_else(|| ProviderError::MissingTarget(req.id.clone()))?;
                    let mut rng = item_rng(*seed, i as u64);
                    let logits = mock_logits(target, *noise_scale, &mut rng)
                        .map_err(|message| ProviderError::Config(format!("item {}: {message}", req.id)))?;
                    Ok(LogitResponse { id: req.id.clone(), logits })
                })
                .collect())
        }
    }
}

fn item_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Logits of a synthetic model whose decoded score is `target_score`.
///
/// Mass is split between the two levels bracketing the target, so with zero
/// noise the expected score reproduces the target. Noise adds independent
/// Gaussian perturbations to all five logits.
pub fn mock_lmm_logits(target_score: f64, noise_scale: f64, seed: u64) -> Result<LevelLogits<f64>, ProviderError> {
    if !(noise_scale.is_finite() && noise_scale >= 0.0) {
        return Err(ProviderError::Config("mock noise must be finite and non-negative".into()));
    }
    mock_logits(target_score, noise_scale, &mut item_rng(seed, 0)).map_err(ProviderError::Config)
}

fn mock_logits(target: f64, noise_scale: f64, rng: &mut ChaCha8Rng) -> Result<LevelLogits<f64>, String> {
    ScoreRange::<f64>::canonical().check(target).map_err(|e| e.to_string())?;
    let lower = target.floor();
    let fraction = target - lower;
    let mut values = [MOCK_FLOOR_LOGIT; LEVEL_COUNT];
    let lower_index = lower as usize - 1;
    if fraction == 0.0 {
        values[lower_index] = 0.0;
    } else {
        values[lower_index] = (1.0 - fraction).portable_ln();
        values[lower_index + 1] = fraction.portable_ln();
    }
    if noise_scale > 0.0 {
        for v in &mut values {
            let z: f64 = rng.sample(StandardNormal);
            *v += noise_scale * z;
        }
    }
    LevelLogits::new(values).map_err(|e| e.to_string())
}

fn fetch_remote(config: &RemoteConfig, requests: &[LogitRequest]) -> Vec<Result<LogitResponse, ProviderError>> {
    let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<LogitResponse, ProviderError>>>> =
        Mutex::new((0..requests.len()).map(|_| None).collect());
    let workers = config.max_inflight.min(requests.len());
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(request) = requests.get(i) else { break };
                let result = fetch_one(&agent, config, request);
                slots.lock().expect("result slots")[i] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots")
        .into_iter()
        .map(|slot| slot.expect("every request answered"))
        .collect()
}

enum Attempt {
    Retry(String),
    Fail(ProviderError),
}

fn fetch_one(agent: &ureq::Agent, config: &RemoteConfig, request: &LogitRequest) -> Result<LogitResponse, ProviderError> {
    let mut attempts = 0;
    loop {
        attempts += 1;
        let message = match attempt(agent, config, request) {
            Ok(response) => return Ok(response),
            Err(Attempt::Fail(err)) => return Err(err),
            Err(Attempt::Retry(message)) => message,
        };
        if attempts > config.retries {
            return Err(ProviderError::Transport { id: request.id.clone(), attempts, message });
        }
        thread::sleep(config.backoff * 2u32.saturating_pow(attempts - 1));
    }
}

fn attempt(agent: &ureq::Agent, config: &RemoteConfig, request: &LogitRequest) -> Result<LogitResponse, Attempt> {
    let protocol = |message: String| Attempt::Fail(ProviderError::Protocol { id: request.id.clone(), message });
    let response = match agent.post(&config.endpoint).send_json(request) {
        Ok(response) => response,
        Err(ureq::Error::Status(status, _)) if status >= 500 || status == 429 => {
            return Err(Attempt::Retry(format!("status {status}")))
        }
        Err(ureq::Error::Status(status, _)) => {
            return Err(Attempt::Fail(ProviderError::Status { id: request.id.clone(), status }))
        }
        Err(ureq::Error::Transport(t)) => return Err(Attempt::Retry(t.to_string())),
    };
    let body = response.into_string().map_err(|e| Attempt::Retry(e.to_string()))?;
    let value: Value = serde_json::from_str(&body).map_err(|e| protocol(e.to_string()))?;
    let (id, logits) = parse_response_body(&value).map_err(protocol)?;
    if id != request.id {
        return Err(protocol(format!("response id {id:?} does not match request")));
    }
    Ok(LogitResponse { id, logits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decode::decode;
    use crate::level::LevelScale;

    fn canonical() -> LevelScale<f64> {
        LevelScale::canonical()
    }

    #[test]
    fn mock_zero_noise_is_exact() {
        let l = mock_lmm_logits(3.5, 0.0, 9).unwrap();
        let d = decode(&l, &canonical());
        assert!((d.probabilities.get(RatingLevel::Fair) - 0.5).abs() < 1e-15);
        assert!((d.probabilities.get(RatingLevel::Good) - 0.5).abs() < 1e-15);
        assert_eq!(d.score, 3.5);
        let l = mock_lmm_logits(5.0, 0.0, 0).unwrap();
        assert_eq!(decode(&l, &canonical()).probabilities.get(RatingLevel::Excellent), 1.0);
        assert!(mock_lmm_logits(0.9, 0.0, 0).is_err());
        assert!(mock_lmm_logits(3.0, -1.0, 0).is_err());
    }

    #[test]
    fn mock_noise_averages_out() {
        for target in [1.3, 2.75, 4.1] {
            let mean: f64 = (0..1000u64)
                .map(|seed| decode(&mock_lmm_logits(target, 0.1, seed).unwrap(), &canonical()).score)
                .sum::<f64>()
                / 1000.0;
            assert!((mean - target).abs() < 0.05, "{target}: {mean}");
        }
    }

    #[test]
    fn logits_object_validation() {
        let ok = serde_json::json!({"excellent": 1.0, "good": 2.0, "fair": 3.0, "poor": 4.0, "bad": 5.0});
        let l = parse_level_logits(&ok).unwrap();
        assert_eq!(l.get(RatingLevel::Bad), Some(5.0));
        let four = serde_json::json!({"excellent": 1.0, "good": 2.0, "fair": 3.0, "poor": 4.0});
        assert!(parse_level_logits(&four).is_err());
        let wrong = serde_json::json!({"excellent": 1.0, "good": 2.0, "fair": 3.0, "poor": 4.0, "awful": 0.0});
        assert!(parse_level_logits(&wrong).is_err());
        let text = serde_json::json!({"excellent": 1.0, "good": 2.0, "fair": 3.0, "poor": 4.0, "bad": "x"});
        assert!(parse_level_logits(&text).is_err());
    }

    #[test]
    fn replay_parsing() {
        let text = r#"{"id":"a","logits":{"excellent":18.03,"good":18.38,"fair":14.63,"poor":11.60,"bad":9.477},"note":"x"}

{"id":"b","logits":{"excellent":0,"good":0,"fair":0,"poor":0,"bad":0}}
"#;
        let rows = parse_replay(text).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].logits.get(RatingLevel::Poor), Some(11.60));
        let dup = format!("{}\n{}", text.lines().next().unwrap(), text.lines().next().unwrap());
        assert!(matches!(parse_replay(&dup), Err(ProviderError::Replay { line: 2, .. })));
    }

    #[test]
    fn mock_provider_reports_missing_targets() {
        let config = ProviderConfig::Mock {
            noise_scale: 0.0,
            seed: 1,
            targets: HashMap::from([("a".to_owned(), 2.0)]),
        };
        let requests = ["a", "b"].map(|id| LogitRequest { id: id.into(), prompt: String::new(), media: vec![] });
        let out = fetch_logits(&config, &requests).unwrap();
        assert!(out[0].is_ok());
        assert!(matches!(out[1], Err(ProviderError::MissingTarget(_))));
    }

    #[test]
    fn remote_config_validation() {
        let mut config = RemoteConfig::new("http://127.0.0.1:9");
        config.max_inflight = 0;
        assert!(fetch_logits(&ProviderConfig::Remote(config), &[]).is_err());
    }
}
