//! Provider wiring: builds the gateway for a run from config, mock or live.
//! Tests can swap in instrumented providers before constructing the gateway.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use valuelex::gateway::clock::{Clock, MockClock, SystemClock};
use valuelex::gateway::limiter::RateLimit;
use valuelex::gateway::mock::{MockEmbedder, MockJudge, MockProvider, MockSpec};
use valuelex::gateway::provider::{
    EmbeddingProvider, HttpEmbeddingProvider, HttpTextProvider, TextProvider,
};
use valuelex::gateway::{Gateway, Judge, RetryPolicy};
use valuelex::{Error, Result};

use crate::config::RunConfig;

pub struct RunContext {
    pub output_dir: PathBuf,
    pub clock: Arc<dyn Clock>,
    pub text_providers: Vec<(Arc<dyn TextProvider>, Option<RateLimit>)>,
    pub embedder: Option<(Arc<dyn EmbeddingProvider>, Option<RateLimit>)>,
}

impl RunContext {
    pub fn from_config(config: &RunConfig, output_dir: &Path) -> Result<Self> {
        let mut text_providers: Vec<(Arc<dyn TextProvider>, Option<RateLimit>)> = Vec::new();
        let embedder: Option<(Arc<dyn EmbeddingProvider>, Option<RateLimit>)>;
        let clock: Arc<dyn Clock>;
        if config.run.mock {
            let spec = config
                .mock
                .clone()
                .unwrap_or_else(|| MockSpec::paper_like(config.run.seed));
            text_providers.push((Arc::new(MockProvider::new(spec.clone())), None));
            text_providers.push((Arc::new(MockJudge::new(spec.judge.clone())), None));
            embedder = Some((Arc::new(MockEmbedder::new(spec.embedder.clone(), spec.seed)), None));
            clock = Arc::new(MockClock::new(0));
        } else {
            for (name, section) in &config.providers {
                text_providers.push((
                    Arc::new(HttpTextProvider::from_env(name, &section.base_url)?),
                    section.rate_limit(),
                ));
            }
            let base_url = config.embedder.base_url.as_deref().ok_or_else(|| {
                Error::Config("embedder.base_url is required for live runs".into())
            })?;
            embedder = Some((
                Arc::new(HttpEmbeddingProvider::from_env(
                    &config.embedder.provider,
                    &config.embedder.model,
                    base_url,
                )?),
                config
                    .providers
                    .get(&config.embedder.provider)
                    .and_then(|p| p.rate_limit()),
            ));
            clock = Arc::new(SystemClock);
        }
        Ok(Self {
            output_dir: output_dir.to_path_buf(),
            clock,
            text_providers,
            embedder,
        })
    }

    pub fn retry_policy(config: &RunConfig) -> RetryPolicy {
        RetryPolicy {
            max_attempts: config.retry.max_attempts.max(1),
            base: Duration::from_millis(config.retry.base_ms),
            factor: config.retry.factor.max(1),
        }
    }

    /// Opens the gateway with persistent caches under `<output>/cache`.
    pub fn gateway(&self, config: &RunConfig) -> Result<Gateway> {
        let mut gw = Gateway::new(self.clock.clone(), Self::retry_policy(config))
            .with_cache_dir(&self.output_dir.join("cache"))?;
        for (provider, limit) in &self.text_providers {
            gw.register_text(provider.clone(), *limit);
        }
        if let Some((embedder, limit)) = &self.embedder {
            gw.register_embedder(embedder.clone(), *limit);
        }
        Ok(gw)
    }

    pub fn judge<'g>(&self, gateway: &'g Gateway, config: &RunConfig) -> Judge<'g> {
        Judge::new(
            gateway,
            &config.judge.provider,
            &config.judge.model,
            config.judge.max_tokens,
        )
    }
}
