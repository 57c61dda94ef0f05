//! Taxonomy construction: factor analysis over the lexicon, embedding-based
//! subclustering, judge naming, and subdimension correlations.

pub mod factor;
pub mod kmeans;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::{EmbeddingRecord, Judge, Respondent};
use crate::elicitation::Lexicon;
use crate::judge::{naming_prompt, parse_name_reply};
pub use factor::{factor_analysis, FactorSolution};

pub const TAXONOMY_SCHEMA: &str = "valuelex/taxonomy/v1";

/// Bundled 10-dimension human value system for comparative scoring.
pub const STBHV_JSON: &str = include_str!("../../data/stbhv.json");
/// Bundled 5-dimension moral-foundations system for comparative scoring.
pub const MFT_JSON: &str = include_str!("../../data/mft.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixWeighting {
    /// 1 when the respondent produced the term at least once.
    Binary,
    /// Raw per-respondent occurrence counts.
    Frequency,
}

/// Respondent x term matrix feeding factor analysis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermMatrix {
    pub respondents: Vec<String>,
    /// Lexicographic column order.
    pub terms: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub weighting: MatrixWeighting,
}

impl TermMatrix {
    pub fn column_of(&self, term: &str) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }
}

/// Restricts the lexicon to terms supported by at least `min_support`
/// distinct respondents; rows follow fleet order, columns lexicographic.
pub fn build_matrix(
    lexicon: &Lexicon,
    fleet: &[Respondent],
    min_support: u32,
    weighting: MatrixWeighting,
) -> Result<TermMatrix> {
    if min_support == 0 {
        return Err(Error::Config("min_support must be >= 1".into()));
    }
    if lexicon.entries.is_empty() {
        return Err(Error::Config("lexicon is empty".into()));
    }
    let terms: Vec<String> = lexicon
        .entries
        .iter()
        .filter(|(_, e)| e.respondent_support >= min_support)
        .map(|(t, _)| t.clone())
        .collect();
    if terms.is_empty() {
        let mut supports: Vec<(&String, u32)> = lexicon
            .entries
            .iter()
            .map(|(t, e)| (t, e.respondent_support))
            .collect();
        supports.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let top: Vec<String> = supports
            .iter()
            .take(5)
            .map(|(t, s)| format!("{t}={s}"))
            .collect();
        return Err(Error::EmptyMatrix(format!(
            "no term reaches min_support {min_support}; top supports: {}",
            top.join(", ")
        )));
    }
    let values = fleet
        .iter()
        .map(|r| {
            terms
                .iter()
                .map(|t| {
                    let count = lexicon.entries[t]
                        .per_respondent_counts
                        .get(&r.id)
                        .copied()
                        .unwrap_or(0);
                    match weighting {
                        MatrixWeighting::Binary => {
                            if count > 0 {
                                1.0
                            } else {
                                0.0
                            }
                        }
                        MatrixWeighting::Frequency => count as f64,
                    }
                })
                .collect()
        })
        .collect();
    Ok(TermMatrix {
        respondents: fleet.iter().map(|r| r.id.clone()).collect(),
        terms,
        values,
        weighting,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubCluster {
    pub members: Vec<String>,
    pub centroid: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorClusters {
    pub factor: usize,
    pub chosen_k: usize,
    pub silhouette: f64,
    pub inertia: f64,
    pub subclusters: Vec<SubCluster>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub factors: Vec<FactorClusters>,
}

/// Refines each factor by KMeans over member-term embeddings. The subcluster
/// count is chosen within `subcluster_range` by mean silhouette (k = 1 scores
/// 0), ties to the smaller k; candidate k larger than the member count is
/// skipped.
pub fn cluster_terms(
    solution: &FactorSolution,
    embeddings: &[EmbeddingRecord],
    subcluster_range: (usize, usize),
    seed: u64,
    restarts: u32,
) -> Result<ClusterAssignment> {
    let (lo, hi) = subcluster_range;
    if lo == 0 || hi < lo {
        return Err(Error::Config(format!(
            "invalid subcluster range [{lo}, {hi}]"
        )));
    }
    let by_term: BTreeMap<&str, &Vec<f64>> =
        embeddings.iter().map(|e| (e.term.as_str(), &e.vector)).collect();

    let mut factors = Vec::new();
    for f in 0..solution.k {
        let members = solution.factor_members(f);
        if members.is_empty() {
            continue;
        }
        let points: Vec<Vec<f64>> = members
            .iter()
            .map(|m| {
                by_term
                    .get(m.as_str())
                    .map(|v| (*v).clone())
                    .ok_or_else(|| Error::Config(format!("no embedding for assigned term {m}")))
            })
            .collect::<Result<_>>()?;

        let mut best: Option<(usize, f64, Vec<usize>)> = None;
        for k in lo..=hi.min(points.len()) {
            let (assignment, silhouette) = if k == 1 {
                (vec![0usize; points.len()], 0.0)
            } else {
                let run = kmeans::kmeans_best(
                    &points,
                    k,
                    restarts,
                    seed.wrapping_mul(6364136223846793005)
                        .wrapping_add((f * 31 + k) as u64),
                );
                let s = kmeans::mean_silhouette(&points, &run.assignment, k);
                (run.assignment, s)
            };
            if best.as_ref().map_or(true, |(_, bs, _)| silhouette > *bs) {
                best = Some((k, silhouette, assignment));
            }
        }
        let (chosen_k, silhouette, assignment) =
            best.ok_or_else(|| Error::Config("empty subcluster candidate range".into()))?;

        let (_, inertia) = kmeans::centroids_and_inertia(&points, &assignment, chosen_k);
        // Order subclusters by first member appearance for determinism.
        let mut label_order: Vec<usize> = Vec::new();
        for &a in &assignment {
            if !label_order.contains(&a) {
                label_order.push(a);
            }
        }
        let subclusters = label_order
            .iter()
            .map(|&label| {
                let member_terms: Vec<String> = members
                    .iter()
                    .zip(&assignment)
                    .filter(|(_, &a)| a == label)
                    .map(|(m, _)| m.clone())
                    .collect();
                let member_points: Vec<Vec<f64>> = points
                    .iter()
                    .zip(&assignment)
                    .filter(|(_, &a)| a == label)
                    .map(|(p, _)| p.clone())
                    .collect();
                let (centroid, _) =
                    kmeans::centroids_and_inertia(&member_points, &vec![0; member_points.len()], 1);
                SubCluster {
                    members: member_terms,
                    centroid: centroid.into_iter().next().unwrap(),
                }
            })
            .collect();
        factors.push(FactorClusters {
            factor: f,
            chosen_k,
            silhouette,
            inertia,
            subclusters,
        });
    }
    Ok(ClusterAssignment { factors })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subdimension {
    pub name: String,
    pub terms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub subdimensions: Vec<Subdimension>,
}

/// The taxonomy artifact. The same schema is the input format for externally
/// authored value systems used in comparative scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Taxonomy {
    pub schema: String,
    pub id: String,
    pub dimensions: Vec<Dimension>,
    /// Row/column labels of `subdim_correlation`, in dimension order.
    pub subdim_order: Vec<String>,
    pub subdim_correlation: Vec<Vec<f64>>,
    #[serde(default)]
    pub correlation_flags: Vec<String>,
    #[serde(default)]
    pub unassigned_terms: Vec<String>,
    #[serde(default)]
    pub seeds: BTreeMap<String, u64>,
    #[serde(default)]
    pub method: BTreeMap<String, String>,
    #[serde(default)]
    pub provenance: String,
}

impl Taxonomy {
    pub fn validate(&self) -> Result<()> {
        if self.schema != TAXONOMY_SCHEMA {
            return Err(Error::Parse(format!(
                "unsupported taxonomy schema {:?}",
                self.schema
            )));
        }
        if self.id.is_empty() {
            return Err(Error::Parse("taxonomy id is empty".into()));
        }
        let mut dim_names = std::collections::BTreeSet::new();
        let mut sub_names = std::collections::BTreeSet::new();
        let mut term_owner: BTreeMap<&str, &str> = BTreeMap::new();
        for dim in &self.dimensions {
            if dim.name.is_empty() || !dim_names.insert(&dim.name) {
                return Err(Error::Parse(format!(
                    "dimension name {:?} empty or duplicated",
                    dim.name
                )));
            }
            for sub in &dim.subdimensions {
                if sub.name.is_empty() || !sub_names.insert(&sub.name) {
                    return Err(Error::Parse(format!(
                        "subdimension name {:?} empty or duplicated",
                        sub.name
                    )));
                }
                for term in &sub.terms {
                    if let Some(prev) = term_owner.insert(term, &sub.name) {
                        return Err(Error::Parse(format!(
                            "term {term:?} appears in both {prev:?} and {:?}",
                            sub.name
                        )));
                    }
                }
            }
        }
        let subs: Vec<&str> = self
            .dimensions
            .iter()
            .flat_map(|d| d.subdimensions.iter().map(|s| s.name.as_str()))
            .collect();
        if self.subdim_order.len() != subs.len()
            || self.subdim_order.iter().map(String::as_str).collect::<Vec<_>>() != subs
        {
            return Err(Error::Parse(
                "subdim_order does not match the declared subdimensions".into(),
            ));
        }
        if self.subdim_correlation.len() != subs.len()
            || self.subdim_correlation.iter().any(|row| row.len() != subs.len())
        {
            return Err(Error::Parse("subdim_correlation shape mismatch".into()));
        }
        for (i, row) in self.subdim_correlation.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::Parse(format!(
                        "correlation [{i}][{j}] = {v} outside [-1, 1]"
                    )));
                }
            }
            if (row[i] - 1.0).abs() > 1e-9 {
                return Err(Error::Parse(format!("correlation diagonal [{i}] != 1")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let tax: Taxonomy = serde_json::from_str(text)?;
        tax.validate()?;
        Ok(tax)
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn dimension_names(&self) -> Vec<String> {
        self.dimensions.iter().map(|d| d.name.clone()).collect()
    }

    pub fn subdimension_names(&self) -> Vec<String> {
        self.subdim_order.clone()
    }
}

/// Per-respondent subdimension activation = mean of its member-term values;
/// Pearson correlation over respondents. Zero-variance pairs are recorded
/// as 0 and flagged.
pub fn subdim_correlation(
    matrix: &TermMatrix,
    subdims: &[(String, Vec<String>)],
) -> Result<(Vec<Vec<f64>>, Vec<String>)> {
    let mut activations: Vec<Vec<f64>> = Vec::with_capacity(subdims.len());
    for (name, terms) in subdims {
        let cols: Vec<usize> = terms.iter().filter_map(|t| matrix.column_of(t)).collect();
        if cols.is_empty() {
            return Err(Error::Config(format!(
                "subdimension {name} has no term with a matrix column"
            )));
        }
        activations.push(
            matrix
                .values
                .iter()
                .map(|row| cols.iter().map(|&c| row[c]).sum::<f64>() / cols.len() as f64)
                .collect(),
        );
    }
    let n = matrix.respondents.len() as f64;
    let stats: Vec<(f64, f64)> = activations
        .iter()
        .map(|a| {
            let sum: f64 = a.iter().sum();
            let sq: f64 = a.iter().map(|v| v * v).sum();
            (sum, n * sq - sum * sum)
        })
        .collect();
    let mut flags = Vec::new();
    let mut corr = vec![vec![0.0; subdims.len()]; subdims.len()];
    for i in 0..subdims.len() {
        corr[i][i] = 1.0;
        for j in (i + 1)..subdims.len() {
            let cross: f64 = activations[i].iter().zip(&activations[j]).map(|(x, y)| x * y).sum();
            let num = n * cross - stats[i].0 * stats[j].0;
            let den = stats[i].1 * stats[j].1;
            let r = if den <= 0.0 {
                flags.push(format!(
                    "zero-variance activation pair: {} ~ {}",
                    subdims[i].0, subdims[j].0
                ));
                0.0
            } else {
                num / den.sqrt()
            };
            corr[i][j] = r;
            corr[j][i] = r;
        }
    }
    Ok((corr, flags))
}

fn dedupe_name(name: String, used: &mut std::collections::BTreeSet<String>) -> String {
    if used.insert(name.clone()) {
        return name;
    }
    let mut suffix = 2;
    loop {
        let candidate = format!("{name}-{suffix}");
        if used.insert(candidate.clone()) {
            return candidate;
        }
        suffix += 1;
    }
}

/// Metadata stamped into the taxonomy artifact.
#[derive(Debug, Clone, Default)]
pub struct TaxonomyMeta {
    pub id: String,
    pub seeds: BTreeMap<String, u64>,
    pub method: BTreeMap<String, String>,
    pub provenance: String,
}

/// Names every dimension and subdimension with the judge (placeholders on
/// judge transport failure), computes subdimension correlations, and
/// assembles the taxonomy artifact.
pub fn name_clusters(
    matrix: &TermMatrix,
    solution: &FactorSolution,
    clusters: &ClusterAssignment,
    judge: &Judge,
    meta: TaxonomyMeta,
) -> Result<(Taxonomy, Vec<String>)> {
    let mut warnings = Vec::new();
    let mut ask_name = |members: &[String], level: &str, fallback: String| -> Result<String> {
        match judge.ask(&naming_prompt(members, level)) {
            Ok(reply) => Ok(parse_name_reply(&reply).unwrap_or_else(|| {
                warnings.push(format!("judge returned no usable {level} name; using {fallback}"));
                fallback.clone()
            })),
            Err(Error::Transport(msg)) => {
                warnings.push(format!("judge unavailable ({msg}); using {fallback}"));
                Ok(fallback)
            }
            Err(Error::Throttled { .. }) => {
                warnings.push(format!("judge throttled; using {fallback}"));
                Ok(fallback)
            }
            Err(e) => Err(e),
        }
    };

    let mut used_dim_names = std::collections::BTreeSet::new();
    let mut used_sub_names = std::collections::BTreeSet::new();
    let mut dimensions = Vec::new();
    for (di, fc) in clusters.factors.iter().enumerate() {
        let mut dim_members: Vec<String> =
            fc.subclusters.iter().flat_map(|s| s.members.clone()).collect();
        dim_members.sort();
        let dim_name = ask_name(&dim_members, "dimension", format!("dimension-{}", di + 1))?;
        let dim_name = dedupe_name(dim_name, &mut used_dim_names);
        let mut subdimensions = Vec::new();
        for (sj, sub) in fc.subclusters.iter().enumerate() {
            let mut members = sub.members.clone();
            members.sort();
            let sub_name = ask_name(
                &members,
                "subdimension",
                format!("subdim-{}-{}", di + 1, sj + 1),
            )?;
            let sub_name = dedupe_name(sub_name, &mut used_sub_names);
            subdimensions.push(Subdimension {
                name: sub_name,
                terms: members,
            });
        }
        dimensions.push(Dimension {
            name: dim_name,
            subdimensions,
        });
    }

    let subdims: Vec<(String, Vec<String>)> = dimensions
        .iter()
        .flat_map(|d| {
            d.subdimensions
                .iter()
                .map(|s| (s.name.clone(), s.terms.clone()))
        })
        .collect();
    let (correlation, flags) = subdim_correlation(matrix, &subdims)?;

    let taxonomy = Taxonomy {
        schema: TAXONOMY_SCHEMA.to_string(),
        id: meta.id,
        dimensions,
        subdim_order: subdims.iter().map(|(n, _)| n.clone()).collect(),
        subdim_correlation: correlation,
        correlation_flags: flags,
        unassigned_terms: solution.unassigned.clone(),
        seeds: meta.seeds,
        method: meta.method,
        provenance: meta.provenance,
    };
    taxonomy.validate()?;
    Ok((taxonomy, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::clock::MockClock;
    use crate::gateway::mock::{JudgeRules, MockJudge};
    use crate::elicitation::LexiconEntry;
    use crate::gateway::{Gateway, RetryPolicy, SamplingConfig};
    use nalgebra::DMatrix;
    use std::sync::Arc;

    fn respondent(id: &str) -> Respondent {
        Respondent {
            id: id.into(),
            provider: "mock".into(),
            model_name: id.split('@').next().unwrap().into(),
            alignment_level: crate::gateway::AlignmentLevel::Aligned,
            size_billions: None,
            sampling: SamplingConfig {
                temperature: 0.2,
                top_p: 1.0,
                max_tokens: 64,
                seed: Some(0),
            },
        }
    }

    fn lexicon_with(entries: &[(&str, &[&str])]) -> Lexicon {
        let mut lex = Lexicon::default();
        for (term, respondents) in entries {
            let mut entry = LexiconEntry::default();
            for r in *respondents {
                entry.per_respondent_counts.insert(r.to_string(), 1);
            }
            entry.total_count = entry.per_respondent_counts.values().sum();
            entry.respondent_support = entry.per_respondent_counts.len() as u32;
            lex.entries.insert(term.to_string(), entry);
        }
        lex
    }

    #[test]
    fn min_support_filters_columns() {
        let lex = lexicon_with(&[("fairness", &["r1", "r2", "r3"]), ("zeal", &["r1"])]);
        let fleet: Vec<Respondent> = ["r1", "r2", "r3"].iter().map(|r| respondent(r)).collect();
        let m = build_matrix(&lex, &fleet, 2, MatrixWeighting::Binary).unwrap();
        assert_eq!(m.terms, vec!["fairness"]);
        assert_eq!(m.values.len(), 3);
    }

    #[test]
    fn incidence_column_reflects_producers() {
        let lex = lexicon_with(&[("fairness", &["r1", "r2"])]);
        let fleet: Vec<Respondent> = ["r1", "r2", "r3"].iter().map(|r| respondent(r)).collect();
        let m = build_matrix(&lex, &fleet, 1, MatrixWeighting::Binary).unwrap();
        let col: Vec<f64> = m.values.iter().map(|r| r[0]).collect();
        assert_eq!(col, vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn empty_matrix_error_lists_top_supports() {
        let lex = lexicon_with(&[("fairness", &["r1"]), ("zeal", &["r2"])]);
        let fleet: Vec<Respondent> = ["r1", "r2"].iter().map(|r| respondent(r)).collect();
        match build_matrix(&lex, &fleet, 3, MatrixWeighting::Binary) {
            Err(Error::EmptyMatrix(msg)) => {
                assert!(msg.contains("fairness=1"), "{msg}");
            }
            other => panic!("expected empty-matrix error, got {other:?}"),
        }
    }

    fn manual_solution(terms_by_factor: &[&[&str]]) -> FactorSolution {
        let mut assignment = BTreeMap::new();
        let mut terms = Vec::new();
        for (f, members) in terms_by_factor.iter().enumerate() {
            for m in *members {
                assignment.insert(m.to_string(), f);
                terms.push(m.to_string());
            }
        }
        terms.sort();
        FactorSolution {
            terms,
            dropped_terms: vec![],
            correlation: DMatrix::identity(1, 1),
            eigenvalues: vec![],
            k: terms_by_factor.len(),
            loadings: DMatrix::identity(1, 1),
            rotation_converged: true,
            assignment,
            unassigned: vec![],
        }
    }

    fn embedding(term: &str, v: &[f64]) -> EmbeddingRecord {
        EmbeddingRecord {
            term: term.into(),
            vector: v.to_vec(),
        }
    }

    #[test]
    fn identical_embeddings_choose_k1_zero_inertia() {
        let solution = manual_solution(&[&["a", "b", "c"]]);
        let embeddings: Vec<EmbeddingRecord> = ["a", "b", "c"]
            .iter()
            .map(|t| embedding(t, &[1.0, 1.0]))
            .collect();
        let out = cluster_terms(&solution, &embeddings, (1, 4), 5, 20).unwrap();
        assert_eq!(out.factors[0].chosen_k, 1);
        assert_eq!(out.factors[0].inertia, 0.0);
        assert_eq!(out.factors[0].subclusters.len(), 1);
    }

    #[test]
    fn planted_two_ball_factor_splits_in_two() {
        let solution = manual_solution(&[&["a1", "a2", "a3", "b1", "b2", "b3"]]);
        let mut embeddings = Vec::new();
        for (i, t) in ["a1", "a2", "a3"].iter().enumerate() {
            embeddings.push(embedding(t, &[0.0 + i as f64 * 0.01, 0.0]));
        }
        for (i, t) in ["b1", "b2", "b3"].iter().enumerate() {
            embeddings.push(embedding(t, &[8.0 + i as f64 * 0.01, 6.0]));
        }
        let out = cluster_terms(&solution, &embeddings, (1, 4), 5, 50).unwrap();
        let fc = &out.factors[0];
        assert_eq!(fc.chosen_k, 2);
        let mut groups: Vec<Vec<String>> =
            fc.subclusters.iter().map(|s| s.members.clone()).collect();
        groups.iter_mut().for_each(|g| g.sort());
        assert!(groups.contains(&vec!["a1".into(), "a2".into(), "a3".into()]));
        assert!(groups.contains(&vec!["b1".into(), "b2".into(), "b3".into()]));
    }

    #[test]
    fn missing_embedding_is_config_error() {
        let solution = manual_solution(&[&["a", "b"]]);
        let embeddings = vec![embedding("a", &[0.0, 0.0])];
        assert!(matches!(
            cluster_terms(&solution, &embeddings, (1, 2), 0, 5),
            Err(Error::Config(_))
        ));
    }

    fn test_matrix(rows: &[(&str, &[f64])], terms: &[&str]) -> TermMatrix {
        TermMatrix {
            respondents: rows.iter().map(|(r, _)| r.to_string()).collect(),
            terms: terms.iter().map(|t| t.to_string()).collect(),
            values: rows.iter().map(|(_, v)| v.to_vec()).collect(),
            weighting: MatrixWeighting::Binary,
        }
    }

    #[test]
    fn anti_aligned_subdimensions_correlate_negatively() {
        // Respondents produce block A xor block B.
        let matrix = test_matrix(
            &[
                ("r1", &[1.0, 1.0, 0.0, 0.0]),
                ("r2", &[1.0, 1.0, 0.0, 0.0]),
                ("r3", &[0.0, 0.0, 1.0, 1.0]),
                ("r4", &[0.0, 0.0, 1.0, 1.0]),
            ],
            &["a1", "a2", "b1", "b2"],
        );
        let subdims = vec![
            ("A".to_string(), vec!["a1".to_string(), "a2".to_string()]),
            ("B".to_string(), vec!["b1".to_string(), "b2".to_string()]),
        ];
        let (corr, flags) = subdim_correlation(&matrix, &subdims).unwrap();
        assert!(flags.is_empty());
        assert_eq!(corr[0][0], 1.0);
        assert!((corr[0][1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_activations_correlate_at_one() {
        let matrix = test_matrix(
            &[("r1", &[1.0, 1.0]), ("r2", &[0.0, 0.0]), ("r3", &[1.0, 1.0])],
            &["x", "y"],
        );
        let subdims = vec![
            ("X".to_string(), vec!["x".to_string()]),
            ("Y".to_string(), vec!["y".to_string()]),
        ];
        let (corr, _) = subdim_correlation(&matrix, &subdims).unwrap();
        assert!((corr[0][1] - 1.0).abs() < 1e-12);
    }

    fn judge_gateway(rules: JudgeRules) -> Gateway {
        let mut gw = Gateway::new(Arc::new(MockClock::new(0)), RetryPolicy::default());
        gw.register_text(Arc::new(MockJudge::new(rules)), None);
        gw
    }

    #[test]
    fn colliding_names_get_numeric_suffixes() {
        let mut rules = JudgeRules::default();
        // Two different member sets canned to the same name (keys are the
        // sorted member lists).
        rules.names.insert("alpha,beta".into(), "Twin".into());
        rules.names.insert("delta,gamma".into(), "Twin".into());
        let gw = judge_gateway(rules);
        let judge = Judge::new(&gw, "mock-judge", "judge-1", 256);

        let solution = manual_solution(&[&["alpha", "beta"], &["gamma", "delta"]]);
        let clusters = ClusterAssignment {
            factors: vec![
                FactorClusters {
                    factor: 0,
                    chosen_k: 1,
                    silhouette: 0.0,
                    inertia: 0.0,
                    subclusters: vec![SubCluster {
                        members: vec!["alpha".into(), "beta".into()],
                        centroid: vec![0.0],
                    }],
                },
                FactorClusters {
                    factor: 1,
                    chosen_k: 1,
                    silhouette: 0.0,
                    inertia: 0.0,
                    subclusters: vec![SubCluster {
                        members: vec!["gamma".into(), "delta".into()],
                        centroid: vec![0.0],
                    }],
                },
            ],
        };
        let matrix = test_matrix(
            &[
                ("r1", &[1.0, 1.0, 0.0, 0.0]),
                ("r2", &[0.0, 0.0, 1.0, 1.0]),
                ("r3", &[1.0, 0.0, 1.0, 0.0]),
            ],
            &["alpha", "beta", "delta", "gamma"],
        );
        let (tax, _) = name_clusters(
            &matrix,
            &solution,
            &clusters,
            &judge,
            TaxonomyMeta {
                id: "test".into(),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(tax.dimensions[0].name, "Twin");
        assert_eq!(tax.dimensions[1].name, "Twin-2");
        tax.validate().unwrap();
    }

    #[test]
    fn single_member_cluster_gets_nonempty_name() {
        let gw = judge_gateway(JudgeRules::default());
        let judge = Judge::new(&gw, "mock-judge", "judge-1", 256);
        let solution = manual_solution(&[&["fairness"]]);
        let clusters = ClusterAssignment {
            factors: vec![FactorClusters {
                factor: 0,
                chosen_k: 1,
                silhouette: 0.0,
                inertia: 0.0,
                subclusters: vec![SubCluster {
                    members: vec!["fairness".into()],
                    centroid: vec![0.0],
                }],
            }],
        };
        let matrix = test_matrix(&[("r1", &[1.0]), ("r2", &[0.0])], &["fairness"]);
        let (tax, _) = name_clusters(
            &matrix,
            &solution,
            &clusters,
            &judge,
            TaxonomyMeta {
                id: "test".into(),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(tax.dimensions[0].name, "Fairness");
        assert!(!tax.dimensions[0].subdimensions[0].name.is_empty());
    }
}
