//! On-disk artifact schemas shared between pipeline stages.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use valuelex::elicitation::{Lexicon, LexiconEntry};
use valuelex::metrics::ScoreHistogram;
use valuelex::projective::{CompletionRecord, GroupBy, InclinationVector, ScoringLevel};
use valuelex::{Error, Result};

pub const LEXICON_SCHEMA: &str = "valuelex/lexicon/v1";
pub const DIAGNOSTICS_SCHEMA: &str = "valuelex/factor-diagnostics/v1";
pub const INCLINATIONS_SCHEMA: &str = "valuelex/inclinations/v1";
pub const KAPPA_SCHEMA: &str = "valuelex/kappa/v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconArtifact {
    pub schema: String,
    pub entries: BTreeMap<String, LexiconEntry>,
}

impl LexiconArtifact {
    pub fn new(lexicon: &Lexicon) -> Self {
        Self {
            schema: LEXICON_SCHEMA.to_string(),
            entries: lexicon.entries.clone(),
        }
    }

    pub fn load(path: &Path) -> Result<Lexicon> {
        let artifact: LexiconArtifact = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if artifact.schema != LEXICON_SCHEMA {
            return Err(Error::Parse(format!(
                "unsupported lexicon schema {:?}",
                artifact.schema
            )));
        }
        Ok(Lexicon {
            entries: artifact.entries,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadingRow {
    pub term: String,
    pub loadings: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorDiag {
    pub factor: usize,
    pub chosen_k: usize,
    pub silhouette: f64,
    pub inertia: f64,
    pub subcluster_sizes: Vec<usize>,
}

/// Eigenvalue scree and rotated loading table, for audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorDiagnostics {
    pub schema: String,
    pub eigenvalues: Vec<f64>,
    pub k: usize,
    pub rotation_converged: bool,
    pub loadings: Vec<LoadingRow>,
    pub dropped_terms: Vec<String>,
    pub unassigned_terms: Vec<String>,
    pub factors: Vec<FactorDiag>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InclinationsArtifact {
    pub schema: String,
    pub group_by: GroupBy,
    pub scoring_level: ScoringLevel,
    pub vectors: Vec<InclinationVector>,
}

impl InclinationsArtifact {
    pub fn load(path: &Path) -> Result<Self> {
        let artifact: InclinationsArtifact = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if artifact.schema != INCLINATIONS_SCHEMA {
            return Err(Error::Parse(format!(
                "unsupported inclinations schema {:?}",
                artifact.schema
            )));
        }
        Ok(artifact)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KappaArtifact {
    pub schema: String,
    pub value: f64,
    pub degenerate: bool,
    pub pairs: usize,
}

/// Report payload: inclination tables plus per-dimension score histograms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportData {
    pub vectors: Vec<InclinationVector>,
    pub histograms: BTreeMap<String, ScoreHistogram>,
    pub kappa: Option<KappaArtifact>,
}

/// Serializes completion records as one JSON object per line.
pub fn completions_to_jsonl(records: &[CompletionRecord]) -> Result<String> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}
