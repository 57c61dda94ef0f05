//! Uniform access to text-generation and embedding providers: sampling-config
//! grid expansion, response caching, rate limiting, and retries.

pub mod cache;
pub mod clock;
pub mod limiter;
pub mod mock;
pub mod provider;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use cache::{CacheFile, CacheRecord, Inflight};
use clock::Clock;
use limiter::{RateLimit, SlidingWindow};
use provider::{EmbeddingProvider, TextProvider};

/// Decoding parameters for one respondent configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(Error::Config(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if !self.top_p.is_finite() || self.top_p <= 0.0 || self.top_p > 1.0 {
            return Err(Error::Config(format!(
                "top_p must be in (0, 1], got {}",
                self.top_p
            )));
        }
        if self.max_tokens == 0 {
            return Err(Error::Config("max_tokens must be >= 1".into()));
        }
        Ok(())
    }
}

/// Training/alignment stage of a model, as declared in the fleet spec.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentLevel {
    Pretrained,
    #[serde(alias = "instruction-tuning", alias = "instruction-tuned")]
    InstructionTuned,
    Aligned,
}

/// One model entry in the fleet spec, before grid expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub provider: String,
    pub model_name: String,
    pub alignment_level: AlignmentLevel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_billions: Option<f64>,
}

/// One (model, provider, sampling-config) triple: the unit participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Respondent {
    pub id: String,
    pub provider: String,
    pub model_name: String,
    pub alignment_level: AlignmentLevel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_billions: Option<f64>,
    pub sampling: SamplingConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub respondent_id: String,
    pub prompt_text: String,
    pub repetition_index: u32,
}

impl GenerationRequest {
    pub fn new(respondent_id: &str, prompt_text: &str, repetition_index: u32) -> Result<Self> {
        if prompt_text.is_empty() {
            return Err(Error::Config("prompt_text must be nonempty".into()));
        }
        Ok(Self {
            respondent_id: respondent_id.to_string(),
            prompt_text: prompt_text.to_string(),
            repetition_index,
        })
    }
}

/// A completed (or failed-and-flagged) generation. `completion_text` may be
/// empty when the provider returned nothing; it is never absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub request: GenerationRequest,
    pub completion_text: String,
    pub timestamp_ms: u64,
    pub cache_hit: bool,
    #[serde(default)]
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub term: String,
    pub vector: Vec<f64>,
}

/// Expands model specs against the sampling grid: models outer, grid inner.
///
/// Respondent ids take the form `<model_name>@t<temperature>-p<top_p>`, so
/// model names must be unique across the whole fleet, not just per provider.
pub fn expand_grid(models: &[ModelSpec], grid: &[SamplingConfig]) -> Result<Vec<Respondent>> {
    if grid.is_empty() {
        return Err(Error::Config("sampling grid must be nonempty".into()));
    }
    for cfg in grid {
        cfg.validate()?;
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut seen_names = std::collections::BTreeSet::new();
    for m in models {
        if !seen.insert((m.provider.clone(), m.model_name.clone())) {
            return Err(Error::Config(format!(
                "duplicate model spec ({}, {})",
                m.provider, m.model_name
            )));
        }
        if !seen_names.insert(m.model_name.clone()) {
            return Err(Error::Config(format!(
                "model name {} appears under two providers; respondent ids would collide",
                m.model_name
            )));
        }
    }
    let mut fleet = Vec::with_capacity(models.len() * grid.len());
    for m in models {
        for cfg in grid {
            fleet.push(Respondent {
                id: format!("{}@t{}-p{}", m.model_name, cfg.temperature, cfg.top_p),
                provider: m.provider.clone(),
                model_name: m.model_name.clone(),
                alignment_level: m.alignment_level,
                size_billions: m.size_billions,
                sampling: cfg.clone(),
            });
        }
    }
    Ok(fleet)
}

/// Retry policy for transport-class failures: exponential backoff starting at
/// `base`, multiplied by `factor` after each failed attempt.
#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base: Duration,
    pub factor: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            base: Duration::from_secs(1),
            factor: 2,
        }
    }
}

impl RetryPolicy {
    fn backoff(&self, attempt: u32) -> Duration {
        self.base * self.factor.saturating_pow(attempt.saturating_sub(1))
    }
}

fn retryable(err: &Error) -> bool {
    matches!(err, Error::Transport(_) | Error::Throttled { .. })
}

/// Persisted generation cache line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CachedGeneration {
    pub key_hash: String,
    pub provider: String,
    pub model_name: String,
    pub sampling: SamplingConfig,
    pub prompt: String,
    pub repetition_index: u32,
    pub completion_text: String,
    pub timestamp_ms: u64,
}

impl CacheRecord for CachedGeneration {
    fn key(&self) -> &str {
        &self.key_hash
    }
}

/// Persisted embedding cache line, keyed by (embedding model, term).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CachedEmbedding {
    pub key_hash: String,
    pub model: String,
    pub term: String,
    pub vector: Vec<f64>,
}

impl CacheRecord for CachedEmbedding {
    fn key(&self) -> &str {
        &self.key_hash
    }
}

fn hex_digest(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p.as_bytes());
        hasher.update([0x1f]);
    }
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn generation_key(respondent: &Respondent, request: &GenerationRequest) -> String {
    let s = &respondent.sampling;
    hex_digest(&[
        "gen",
        &respondent.provider,
        &respondent.model_name,
        &s.temperature.to_string(),
        &s.top_p.to_string(),
        &s.max_tokens.to_string(),
        &s.seed.map(|v| v.to_string()).unwrap_or_default(),
        &request.prompt_text,
        &request.repetition_index.to_string(),
    ])
}

pub fn embedding_key(model: &str, term: &str) -> String {
    hex_digest(&["emb", model, term])
}

struct TextSlot {
    provider: Arc<dyn TextProvider>,
    limiter: Option<Mutex<SlidingWindow>>,
}

/// Front door for all remote calls. Serves cached records without touching
/// the network; at most one network call is ever made per cache key.
pub struct Gateway {
    clock: Arc<dyn Clock>,
    retry: RetryPolicy,
    text: BTreeMap<String, TextSlot>,
    embedder: Option<(Arc<dyn EmbeddingProvider>, Option<Mutex<SlidingWindow>>)>,
    generations: CacheFile<CachedGeneration>,
    embeddings: CacheFile<CachedEmbedding>,
    inflight: Inflight,
    calls: AtomicU64,
    hits: AtomicU64,
}

impl Gateway {
    pub fn new(clock: Arc<dyn Clock>, retry: RetryPolicy) -> Self {
        Self {
            clock,
            retry,
            text: BTreeMap::new(),
            embedder: None,
            generations: CacheFile::ephemeral(),
            embeddings: CacheFile::ephemeral(),
            inflight: Inflight::default(),
            calls: AtomicU64::new(0),
            hits: AtomicU64::new(0),
        }
    }

    /// Attaches persistent caches under `dir` (generations.jsonl and
    /// embeddings.jsonl), loading any existing records.
    pub fn with_cache_dir(mut self, dir: &Path) -> Result<Self> {
        self.generations = CacheFile::open(&dir.join("generations.jsonl"))?;
        self.embeddings = CacheFile::open(&dir.join("embeddings.jsonl"))?;
        Ok(self)
    }

    pub fn register_text(&mut self, provider: Arc<dyn TextProvider>, limit: Option<RateLimit>) {
        self.text.insert(
            provider.name().to_string(),
            TextSlot {
                provider,
                limiter: limit.map(|l| Mutex::new(SlidingWindow::new(l))),
            },
        );
    }

    pub fn register_embedder(
        &mut self,
        provider: Arc<dyn EmbeddingProvider>,
        limit: Option<RateLimit>,
    ) {
        self.embedder = Some((provider, limit.map(|l| Mutex::new(SlidingWindow::new(l)))));
    }

    pub fn embedding_model(&self) -> Option<String> {
        self.embedder.as_ref().map(|(p, _)| p.model().to_string())
    }

    /// Total network calls made through this gateway (attempts included).
    pub fn provider_calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn cache_hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    /// Generates a completion, serving byte-identical replays from cache.
    pub fn generate(
        &self,
        respondent: &Respondent,
        request: &GenerationRequest,
    ) -> Result<GenerationRecord> {
        if request.prompt_text.is_empty() {
            return Err(Error::Config("prompt_text must be nonempty".into()));
        }
        let key = generation_key(respondent, request);
        if let Some(cached) = self.generations.get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(GenerationRecord {
                request: request.clone(),
                completion_text: cached.completion_text,
                timestamp_ms: cached.timestamp_ms,
                cache_hit: true,
                failed: false,
            });
        }

        self.inflight.enter(&key);
        let guard = InflightGuard {
            inflight: &self.inflight,
            key: &key,
        };
        if let Some(cached) = self.generations.get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            drop(guard);
            return Ok(GenerationRecord {
                request: request.clone(),
                completion_text: cached.completion_text,
                timestamp_ms: cached.timestamp_ms,
                cache_hit: true,
                failed: false,
            });
        }

        let slot = self.text.get(&respondent.provider).ok_or_else(|| {
            Error::Config(format!("no provider registered as {}", respondent.provider))
        })?;

        let mut attempt = 0u32;
        let text = loop {
            attempt += 1;
            if let Some(lim) = &slot.limiter {
                lim.lock().unwrap().acquire(self.clock.as_ref());
            }
            self.calls.fetch_add(1, Ordering::Relaxed);
            match slot.provider.generate(respondent, request) {
                Ok(text) => break text,
                Err(e) if retryable(&e) && attempt < self.retry.max_attempts => {
                    let mut wait = self.retry.backoff(attempt);
                    if let Error::Throttled {
                        retry_after: Some(hint),
                    } = &e
                    {
                        wait = wait.max(*hint);
                    }
                    self.clock.sleep(wait);
                }
                Err(e) => return Err(e),
            }
        };

        let timestamp_ms = self.clock.now_ms();
        self.generations.insert(CachedGeneration {
            key_hash: key.clone(),
            provider: respondent.provider.clone(),
            model_name: respondent.model_name.clone(),
            sampling: respondent.sampling.clone(),
            prompt: request.prompt_text.clone(),
            repetition_index: request.repetition_index,
            completion_text: text.clone(),
            timestamp_ms,
        })?;
        drop(guard);
        Ok(GenerationRecord {
            request: request.clone(),
            completion_text: text,
            timestamp_ms,
            cache_hit: false,
            failed: false,
        })
    }

    /// Embeds each term, one record per input in input order. Results are
    /// cached by (embedding model, term); vectors are validated to share one
    /// finite length >= 2.
    pub fn embed(&self, terms: &[String]) -> Result<Vec<EmbeddingRecord>> {
        if terms.is_empty() {
            return Err(Error::Config("terms must be nonempty".into()));
        }
        if terms.iter().any(|t| t.is_empty()) {
            return Err(Error::Config("every term must be a nonempty string".into()));
        }
        let (embedder, limiter) = self
            .embedder
            .as_ref()
            .ok_or_else(|| Error::Config("no embedding provider registered".into()))?;
        let model = embedder.model().to_string();

        let mut vectors: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut missing: Vec<String> = Vec::new();
        for term in terms {
            if vectors.contains_key(term) || missing.contains(term) {
                continue;
            }
            match self.embeddings.get(&embedding_key(&model, term)) {
                Some(cached) => {
                    self.hits.fetch_add(1, Ordering::Relaxed);
                    vectors.insert(term.clone(), cached.vector);
                }
                None => missing.push(term.clone()),
            }
        }

        for chunk in missing.chunks(256) {
            if let Some(lim) = limiter {
                lim.lock().unwrap().acquire(self.clock.as_ref());
            }
            self.calls.fetch_add(1, Ordering::Relaxed);
            let embedded = embedder.embed(chunk)?;
            if embedded.len() != chunk.len() {
                return Err(Error::Integrity(format!(
                    "embedder returned {} vectors for {} terms",
                    embedded.len(),
                    chunk.len()
                )));
            }
            for (term, vector) in chunk.iter().zip(embedded) {
                if vector.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Integrity(format!(
                        "non-finite embedding component for term {term}"
                    )));
                }
                self.embeddings.insert(CachedEmbedding {
                    key_hash: embedding_key(&model, term),
                    model: model.clone(),
                    term: term.clone(),
                    vector: vector.clone(),
                })?;
                vectors.insert(term.clone(), vector);
            }
        }

        let records: Vec<EmbeddingRecord> = terms
            .iter()
            .map(|term| EmbeddingRecord {
                term: term.clone(),
                vector: vectors[term].clone(),
            })
            .collect();

        let dim = records[0].vector.len();
        if dim < 2 {
            return Err(Error::Integrity(format!(
                "embedding length must be >= 2, got {dim}"
            )));
        }
        if let Some(bad) = records.iter().find(|r| r.vector.len() != dim) {
            return Err(Error::Integrity(format!(
                "mixed embedding lengths: term {} has {} components, expected {dim}",
                bad.term,
                bad.vector.len()
            )));
        }
        Ok(records)
    }
}

struct InflightGuard<'a> {
    inflight: &'a Inflight,
    key: &'a str,
}

impl Drop for InflightGuard<'_> {
    fn drop(&mut self) {
        self.inflight.exit(self.key);
    }
}

/// A generation provider designated as judge: fixed respondent, temperature 0,
/// all calls routed (and cached) through the gateway.
pub struct Judge<'g> {
    gateway: &'g Gateway,
    respondent: Respondent,
}

impl<'g> Judge<'g> {
    pub fn new(gateway: &'g Gateway, provider: &str, model_name: &str, max_tokens: u32) -> Self {
        let sampling = SamplingConfig {
            temperature: 0.0,
            top_p: 1.0,
            max_tokens,
            seed: Some(0),
        };
        let respondent = Respondent {
            id: format!("judge:{model_name}"),
            provider: provider.to_string(),
            model_name: model_name.to_string(),
            alignment_level: AlignmentLevel::Aligned,
            size_billions: None,
            sampling,
        };
        Self {
            gateway,
            respondent,
        }
    }

    pub fn scorer_id(&self) -> String {
        format!("{}:{}", self.respondent.provider, self.respondent.model_name)
    }

    pub fn ask(&self, prompt: &str) -> Result<String> {
        let request = GenerationRequest::new(&self.respondent.id, prompt, 0)?;
        Ok(self
            .gateway
            .generate(&self.respondent, &request)?
            .completion_text)
    }

    /// Same prompt, distinct repetition index; used for the single reparse retry.
    pub fn ask_again(&self, prompt: &str) -> Result<String> {
        let request = GenerationRequest::new(&self.respondent.id, prompt, 1)?;
        Ok(self
            .gateway
            .generate(&self.respondent, &request)?
            .completion_text)
    }
}
