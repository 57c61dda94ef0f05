//! Reliability statistics: quadratic weighted kappa and score diagnostics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projective::ScoreRecord;

/// Paired ratings from two raters over the same items.
#[derive(Debug, Clone)]
pub struct RatingPairs {
    items: Vec<(u32, u32)>,
    num_levels: u32,
}

impl RatingPairs {
    pub fn new(items: Vec<(u32, u32)>, num_levels: u32) -> Result<Self> {
        if num_levels < 2 {
            return Err(Error::Config(format!(
                "num_levels must be >= 2, got {num_levels}"
            )));
        }
        if items.is_empty() {
            return Err(Error::Config("rating pairs must be nonempty".into()));
        }
        if let Some((a, b)) = items
            .iter()
            .find(|(a, b)| *a >= num_levels || *b >= num_levels)
        {
            return Err(Error::Config(format!(
                "rating ({a}, {b}) outside level range 0..{num_levels}"
            )));
        }
        Ok(Self { items, num_levels })
    }

    pub fn items(&self) -> &[(u32, u32)] {
        &self.items
    }

    pub fn num_levels(&self) -> u32 {
        self.num_levels
    }
}

/// Quadratic weighted kappa outcome.
///
/// `degenerate` marks the constant-level all-agree case where chance
/// disagreement is zero and kappa is defined as 1 by convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub value: f64,
    pub degenerate: bool,
}

/// Quadratic weighted kappa between two raters.
///
/// kappa = 1 - sum(w*O) / sum(w*E) with w_ij = (i-j)^2/(L-1)^2, O the observed
/// joint histogram and E the outer product of the marginals scaled to the same
/// total as O. The (L-1)^2 and total factors cancel, so both sums are
/// accumulated as exact integers and kappa is produced by a single division.
pub fn quadratic_weighted_kappa(pairs: &RatingPairs) -> Result<KappaResult> {
    let n = pairs.items.len() as u128;

    // sum(w*O) * (L-1)^2 = sum over items of (a-b)^2
    let observed: u128 = pairs
        .items
        .iter()
        .map(|&(a, b)| {
            let d = a.abs_diff(b) as u128;
            d * d
        })
        .sum();

    let levels = pairs.num_levels as usize;
    let mut marg_a = vec![0u128; levels];
    let mut marg_b = vec![0u128; levels];
    for &(a, b) in &pairs.items {
        marg_a[a as usize] += 1;
        marg_b[b as usize] += 1;
    }

    // sum(w*E) * (L-1)^2 * n = sum over level pairs of a_i * b_j * (i-j)^2
    let mut expected: u128 = 0;
    for (i, &ca) in marg_a.iter().enumerate() {
        if ca == 0 {
            continue;
        }
        for (j, &cb) in marg_b.iter().enumerate() {
            if cb == 0 {
                continue;
            }
            let d = (i as i64 - j as i64).unsigned_abs() as u128;
            expected += ca * cb * d * d;
        }
    }

    if expected == 0 {
        if observed == 0 {
            // Both raters used a single identical level for every item.
            return Ok(KappaResult {
                value: 1.0,
                degenerate: true,
            });
        }
        return Err(Error::UndefinedKappa(
            "zero expected disagreement with nonzero observed disagreement".into(),
        ));
    }

    let value = 1.0 - (observed * n) as f64 / expected as f64;
    Ok(KappaResult {
        value,
        degenerate: false,
    })
}

/// One row of an annotation file: a human score joined to a completion
/// reference.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct AnnotationRow {
    pub respondent_id: String,
    pub stem_id: u32,
    pub repetition: u32,
    pub dimension: String,
    pub human_score: u8,
}

/// Parses an annotation CSV, ignoring columns beyond the join fields.
pub fn parse_annotations_csv(text: &str) -> Result<Vec<AnnotationRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .clone();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        let row: AnnotationRow = record
            .deserialize(Some(&headers))
            .map_err(|e| Error::Parse(e.to_string()))?;
        if row.human_score > 6 {
            return Err(Error::Parse(format!(
                "human score {} outside 0..=6",
                row.human_score
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Joins annotations to judge scores on (respondent, stem, repetition,
/// dimension); pairs are returned as (human, judge) in sorted key order.
pub fn join_annotations(scores: &[ScoreRecord], annotations: &[AnnotationRow]) -> Vec<(u32, u32)> {
    let by_key: BTreeMap<(&str, u32, u32, &str), u8> = scores
        .iter()
        .map(|s| {
            (
                (
                    s.completion.respondent_id.as_str(),
                    s.completion.stem_id,
                    s.completion.repetition,
                    s.dimension.as_str(),
                ),
                s.raw_score,
            )
        })
        .collect();
    let mut joined: Vec<((&str, u32, u32, &str), (u32, u32))> = annotations
        .iter()
        .filter_map(|a| {
            let key = (
                a.respondent_id.as_str(),
                a.stem_id,
                a.repetition,
                a.dimension.as_str(),
            );
            by_key
                .get(&key)
                .map(|&judge| (key, (a.human_score as u32, judge as u32)))
        })
        .collect();
    joined.sort();
    joined.into_iter().map(|(_, pair)| pair).collect()
}

/// Per-dimension 7-bin histogram with mean and population variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreHistogram {
    pub bins: [u64; 7],
    pub count: u64,
    pub mean: f64,
    pub variance: f64,
}

/// Histogram of raw scores per dimension, for run diagnostics.
pub fn score_distribution(scores: &[ScoreRecord]) -> BTreeMap<String, ScoreHistogram> {
    let mut bins_by_dim: BTreeMap<String, [u64; 7]> = BTreeMap::new();
    for rec in scores {
        let bins = bins_by_dim.entry(rec.dimension.clone()).or_default();
        bins[rec.raw_score as usize] += 1;
    }
    bins_by_dim
        .into_iter()
        .map(|(dim, bins)| {
            let count: u64 = bins.iter().sum();
            let sum: u64 = bins.iter().enumerate().map(|(v, c)| v as u64 * c).sum();
            let mean = sum as f64 / count as f64;
            let sq_dev: f64 = bins
                .iter()
                .enumerate()
                .map(|(v, &c)| c as f64 * (v as f64 - mean).powi(2))
                .sum();
            let variance = sq_dev / count as f64;
            (
                dim,
                ScoreHistogram {
                    bins,
                    count,
                    mean,
                    variance,
                },
            )
        })
        .collect()
}
