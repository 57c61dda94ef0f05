//! Declarative run configuration. One TOML file drives every stage; unknown
//! keys are rejected and all seeds are explicit.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use valuelex::gateway::limiter::RateLimit;
use valuelex::gateway::mock::MockSpec;
use valuelex::gateway::{AlignmentLevel, ModelSpec, SamplingConfig};
use valuelex::projective::{GroupBy, ScoringLevel};
use valuelex::taxonomy::MatrixWeighting;
use valuelex::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub fleet: FleetSection,
    #[serde(default)]
    pub elicitation: ElicitationSection,
    #[serde(default)]
    pub taxonomy: TaxonomySection,
    #[serde(default)]
    pub projective: ProjectiveSection,
    #[serde(default)]
    pub judge: JudgeSection,
    #[serde(default)]
    pub embedder: EmbedderSection,
    #[serde(default)]
    pub providers: BTreeMap<String, ProviderSection>,
    #[serde(default)]
    pub retry: RetrySection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock: Option<MockSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Master seed; no stage draws implicit entropy.
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub mock: bool,
    #[serde(default = "default_group_by")]
    pub group_by: GroupBy,
    #[serde(default = "default_scoring_level")]
    pub scoring_level: ScoringLevel,
}

fn default_group_by() -> GroupBy {
    GroupBy::Model
}

fn default_scoring_level() -> ScoringLevel {
    ScoringLevel::Subdimension
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetSection {
    pub models: Vec<ModelSpec>,
    #[serde(default = "default_grid")]
    pub grid: Vec<SamplingConfig>,
}

/// Default sampling grid: temperatures {0.2, 0.7, 1.0} x top_p {0.9, 1.0}.
pub fn default_grid() -> Vec<SamplingConfig> {
    let mut grid = Vec::new();
    for &temperature in &[0.2, 0.7, 1.0] {
        for &top_p in &[0.9, 1.0] {
            grid.push(SamplingConfig {
                temperature,
                top_p,
                max_tokens: 256,
                seed: None,
            });
        }
    }
    grid
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElicitationSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompts_path: Option<PathBuf>,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    #[serde(default = "default_failure_threshold")]
    pub failure_threshold: f64,
}

fn default_repetitions() -> u32 {
    3
}

fn default_failure_threshold() -> f64 {
    0.5
}

impl Default for ElicitationSection {
    fn default() -> Self {
        Self {
            prompts_path: None,
            repetitions: default_repetitions(),
            failure_threshold: default_failure_threshold(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaxonomySection {
    #[serde(default = "default_min_support")]
    pub min_support: u32,
    #[serde(default = "default_weighting")]
    pub weighting: MatrixWeighting,
    #[serde(default = "default_subcluster_min")]
    pub subcluster_min: usize,
    #[serde(default = "default_subcluster_max")]
    pub subcluster_max: usize,
    #[serde(default = "default_restarts")]
    pub kmeans_restarts: u32,
    /// Extra taxonomy files scored alongside the built one; `builtin:stbhv`
    /// and `builtin:mft` name the bundled systems.
    #[serde(default)]
    pub comparative: Vec<String>,
}

fn default_min_support() -> u32 {
    2
}

fn default_weighting() -> MatrixWeighting {
    MatrixWeighting::Binary
}

fn default_subcluster_min() -> usize {
    1
}

fn default_subcluster_max() -> usize {
    4
}

fn default_restarts() -> u32 {
    100
}

impl Default for TaxonomySection {
    fn default() -> Self {
        Self {
            min_support: default_min_support(),
            weighting: default_weighting(),
            subcluster_min: default_subcluster_min(),
            subcluster_max: default_subcluster_max(),
            kmeans_restarts: default_restarts(),
            comparative: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectiveSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stems_path: Option<PathBuf>,
    /// Repetitions M per (stem, config).
    #[serde(default = "default_m")]
    pub m: u32,
}

fn default_m() -> u32 {
    3
}

impl Default for ProjectiveSection {
    fn default() -> Self {
        Self {
            stems_path: None,
            m: default_m(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgeSection {
    #[serde(default = "default_judge_provider")]
    pub provider: String,
    #[serde(default = "default_judge_model")]
    pub model: String,
    #[serde(default = "default_judge_tokens")]
    pub max_tokens: u32,
}

fn default_judge_provider() -> String {
    "mock-judge".into()
}

fn default_judge_model() -> String {
    "judge-1".into()
}

fn default_judge_tokens() -> u32 {
    512
}

impl Default for JudgeSection {
    fn default() -> Self {
        Self {
            provider: default_judge_provider(),
            model: default_judge_model(),
            max_tokens: default_judge_tokens(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedderSection {
    #[serde(default = "default_embedder_provider")]
    pub provider: String,
    #[serde(default = "default_embedder_model")]
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_url: Option<String>,
}

fn default_embedder_provider() -> String {
    "mock-embedder".into()
}

fn default_embedder_model() -> String {
    "mock-embed-v1".into()
}

impl Default for EmbedderSection {
    fn default() -> Self {
        Self {
            provider: default_embedder_provider(),
            model: default_embedder_model(),
            base_url: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderSection {
    pub base_url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requests_per_second: Option<u32>,
}

impl ProviderSection {
    pub fn rate_limit(&self) -> Option<RateLimit> {
        self.requests_per_second
            .map(|r| RateLimit {
                requests_per_second: r,
            })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrySection {
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
    #[serde(default = "default_base_ms")]
    pub base_ms: u64,
    #[serde(default = "default_factor")]
    pub factor: u32,
}

fn default_attempts() -> u32 {
    5
}

fn default_base_ms() -> u64 {
    1000
}

fn default_factor() -> u32 {
    2
}

impl Default for RetrySection {
    fn default() -> Self {
        Self {
            max_attempts: default_attempts(),
            base_ms: default_base_ms(),
            factor: default_factor(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.fleet.models.is_empty() {
            return Err(Error::Config("fleet.models is empty".into()));
        }
        if self.fleet.grid.is_empty() {
            return Err(Error::Config("fleet.grid is empty".into()));
        }
        for cfg in &self.fleet.grid {
            cfg.validate()?;
        }
        for path in [
            self.elicitation.prompts_path.as_deref(),
            self.projective.stems_path.as_deref(),
        ]
        .into_iter()
        .flatten()
        {
            if !path.exists() {
                return Err(Error::Config(format!("referenced file missing: {path:?}")));
            }
        }
        for entry in &self.taxonomy.comparative {
            if !entry.starts_with("builtin:") && !Path::new(entry).exists() {
                return Err(Error::Config(format!(
                    "comparative taxonomy file missing: {entry}"
                )));
            }
        }
        if self.taxonomy.subcluster_min == 0 || self.taxonomy.subcluster_max < self.taxonomy.subcluster_min {
            return Err(Error::Config("invalid subcluster range".into()));
        }
        if !(0.0..=1.0).contains(&self.elicitation.failure_threshold) {
            return Err(Error::Config("failure_threshold must be in [0, 1]".into()));
        }
        if self.run.mock && self.mock.is_none() {
            // allowed: the built-in mock fixture is used
        }
        Ok(())
    }

    /// Built-in mock run: the bundled six-persona fleet over the default grid.
    pub fn builtin_mock(seed: u64) -> Self {
        let model = |name: &str, level: AlignmentLevel, size: Option<f64>| ModelSpec {
            provider: "mock".into(),
            model_name: name.into(),
            alignment_level: level,
            size_billions: size,
        };
        Self {
            run: RunSection {
                seed,
                output_dir: None,
                mock: true,
                group_by: default_group_by(),
                scoring_level: default_scoring_level(),
            },
            fleet: FleetSection {
                models: vec![
                    model("prime-aligned", AlignmentLevel::Aligned, Some(70.0)),
                    model("sage-aligned", AlignmentLevel::Aligned, Some(13.0)),
                    model("helper-it", AlignmentLevel::InstructionTuned, Some(7.0)),
                    model("mentor-it", AlignmentLevel::InstructionTuned, Some(13.0)),
                    model("scholar-base", AlignmentLevel::Pretrained, Some(7.0)),
                    model("drifter-base", AlignmentLevel::Pretrained, None),
                ],
                grid: default_grid(),
            },
            elicitation: ElicitationSection::default(),
            taxonomy: TaxonomySection::default(),
            projective: ProjectiveSection::default(),
            judge: JudgeSection::default(),
            embedder: EmbedderSection::default(),
            providers: BTreeMap::new(),
            retry: RetrySection::default(),
            mock: Some(MockSpec::paper_like(seed)),
        }
    }

    /// Config snapshot for manifests: the full config minus the output path,
    /// so identically seeded runs in different directories produce identical
    /// manifests.
    pub fn snapshot(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(self).unwrap_or(serde_json::Value::Null);
        if let Some(run) = value.get_mut("run").and_then(|r| r.as_object_mut()) {
            run.remove("output_dir");
        }
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_mock_config_validates() {
        let config = RunConfig::builtin_mock(7);
        config.validate().unwrap();
        assert_eq!(config.fleet.grid.len(), 6);
        assert_eq!(config.fleet.models.len(), 6);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let toml = r#"
            [run]
            seed = 1
            surprise = true
            [fleet]
            models = []
        "#;
        assert!(RunConfig::from_toml(toml).is_err());
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let toml = r#"
            [run]
            seed = 3
            mock = true
            [fleet]
            [[fleet.models]]
            provider = "mock"
            model_name = "prime-aligned"
            alignment_level = "aligned"
        "#;
        let config = RunConfig::from_toml(toml).unwrap();
        assert_eq!(config.fleet.grid.len(), 6);
        assert_eq!(config.elicitation.repetitions, 3);
        assert_eq!(config.projective.m, 3);
        assert_eq!(config.taxonomy.min_support, 2);
    }

    #[test]
    fn snapshot_drops_output_dir() {
        let mut config = RunConfig::builtin_mock(7);
        config.run.output_dir = Some(PathBuf::from("/tmp/somewhere"));
        let snap = config.snapshot();
        assert!(snap["run"].get("output_dir").is_none());
        assert_eq!(snap["run"]["seed"], 7);
    }
}
