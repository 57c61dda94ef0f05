//! Value elicitation: run the prompt set over the respondent fleet and distill
//! raw completions into a candidate value lexicon.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::{Gateway, GenerationRecord, GenerationRequest, Judge, Respondent};
use crate::judge::{filter_prompt, parse_filter_reply};

/// Bundled default elicitation prompts.
pub const DEFAULT_PROMPTS: &str = include_str!("../data/elicitation_prompts.txt");

/// Ordered elicitation prompts with stable 1-based ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSet {
    prompts: Vec<String>,
}

impl PromptSet {
    /// The default 15-prompt set shipped with the toolkit.
    pub fn bundled() -> Self {
        Self::from_text(DEFAULT_PROMPTS).expect("bundled prompt set parses")
    }

    /// Parses one prompt per line; `#` lines and blank lines are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let prompts: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
        if prompts.is_empty() {
            return Err(Error::Config("prompt set is empty".into()));
        }
        Ok(Self { prompts })
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    /// (1-based id, prompt text) in file order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, &str)> {
        self.prompts
            .iter()
            .enumerate()
            .map(|(i, p)| (i as u32 + 1, p.as_str()))
    }

    pub fn len(&self) -> usize {
        self.prompts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prompts.is_empty()
    }
}

/// One normalized single-token candidate extracted from a completion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateTerm {
    pub surface: String,
    pub respondent_id: String,
    pub prompt_id: u32,
    pub count: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub total_count: u64,
    pub respondent_support: u32,
    pub per_respondent_counts: BTreeMap<String, u64>,
}

/// Candidate value terms with per-respondent frequencies, keyed by surface.
/// Iteration order is lexicographic.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    pub entries: BTreeMap<String, LexiconEntry>,
}

impl Lexicon {
    pub fn total_occurrences(&self) -> u64 {
        self.entries.values().map(|e| e.total_count).sum()
    }
}

/// Outcome of a full elicitation sweep.
#[derive(Debug, Clone)]
pub struct ElicitationRun {
    /// Exactly fleet x prompts x repetitions records, in sweep order.
    /// Records that failed after retry exhaustion carry empty text and
    /// `failed = true`.
    pub records: Vec<(u32, GenerationRecord)>,
    pub failed: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct ElicitationOptions {
    /// Abort when failed/total strictly exceeds this fraction.
    pub failure_threshold: f64,
}

impl Default for ElicitationOptions {
    fn default() -> Self {
        Self {
            failure_threshold: 0.5,
        }
    }
}

/// Runs every (respondent, prompt, repetition) cell through the gateway.
/// Reruns complete only cache-missing records, so an interrupted sweep is
/// resumable.
pub fn run_elicitation(
    gateway: &Gateway,
    fleet: &[Respondent],
    prompts: &PromptSet,
    repetitions: u32,
    options: ElicitationOptions,
) -> Result<ElicitationRun> {
    if fleet.is_empty() {
        return Err(Error::Config("fleet must be nonempty".into()));
    }
    if repetitions == 0 {
        return Err(Error::Config("repetitions must be >= 1".into()));
    }
    let mut records = Vec::with_capacity(fleet.len() * prompts.len() * repetitions as usize);
    let mut failed = 0usize;
    for respondent in fleet {
        for (prompt_id, prompt) in prompts.iter() {
            for rep in 0..repetitions {
                let request = GenerationRequest::new(&respondent.id, prompt, rep)?;
                match gateway.generate(respondent, &request) {
                    Ok(record) => records.push((prompt_id, record)),
                    Err(e @ (Error::Config(_) | Error::Integrity(_))) => return Err(e),
                    Err(e) => {
                        log::warn!("elicitation record failed: {e}");
                        failed += 1;
                        records.push((
                            prompt_id,
                            GenerationRecord {
                                request,
                                completion_text: String::new(),
                                timestamp_ms: 0,
                                cache_hit: false,
                                failed: true,
                            },
                        ));
                    }
                }
            }
        }
    }
    let total = records.len();
    if total > 0 && (failed as f64) / (total as f64) > options.failure_threshold {
        return Err(Error::FailureThreshold { failed, total });
    }
    Ok(ElicitationRun { records, failed })
}

const STOPWORDS: &[&str] = &[
    "about", "above", "after", "again", "all", "also", "and", "any", "are", "because", "been",
    "before", "being", "below", "between", "both", "but", "can", "could", "did", "does", "doing",
    "down", "during", "each", "else", "etc", "few", "for", "from", "further", "had", "has",
    "have", "having", "her", "here", "hers", "him", "his", "how", "into", "its", "itself", "just",
    "may", "might", "more", "most", "must", "nor", "not", "now", "off", "once", "only", "onto",
    "other", "our", "ours", "out", "over", "own", "same", "shall", "she", "should", "some",
    "such", "than", "that", "the", "their", "theirs", "them", "then", "there", "these", "they",
    "this", "those", "through", "too", "under", "until", "upon", "very", "was", "were", "what",
    "when", "where", "which", "while", "who", "whom", "whose", "why", "will", "with", "would",
    "yes", "yet", "you", "your", "yours",
];

fn is_stopword(word: &str) -> bool {
    STOPWORDS.binary_search(&word).is_ok()
}

/// Strips a leading list marker: digits followed by `.`/`)`/`]`/`:`, or a
/// bullet character.
fn strip_list_marker(fragment: &str) -> &str {
    let s = fragment.trim_start();
    let digits = s.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits > 0 {
        let rest = &s[digits..];
        if let Some(stripped) = rest.strip_prefix(['.', ')', ']', ':']) {
            return stripped.trim_start();
        }
    }
    s.trim_start_matches(['-', '*', '•', '·']).trim_start()
}

fn normalize_fragment(fragment: &str) -> Option<String> {
    let stripped = strip_list_marker(fragment);
    // Strip punctuation and quotes from the edges; keep interior characters
    // so non-word tokens like "3000mhz" fail the shape check instead of
    // being mangled into words.
    let trimmed = stripped
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase();
    if trimmed.len() < 3 {
        return None;
    }
    if trimmed.split_whitespace().count() != 1 {
        return None;
    }
    let mut chars = trimmed.chars();
    let first_ok = chars.next().is_some_and(|c| c.is_ascii_lowercase());
    if !first_ok || !trimmed.chars().all(|c| c.is_ascii_lowercase() || c == '-') {
        return None;
    }
    if is_stopword(&trimmed) {
        return None;
    }
    Some(trimmed)
}

/// Rule-stage extraction: split on commas, semicolons, newlines, and list
/// markers; normalize each fragment; keep single lowercase word tokens of
/// length >= 3 that are not stopwords; dedupe within the record with counts.
///
/// A pure function of the completion text.
pub fn extract_terms(record: &GenerationRecord, prompt_id: u32) -> Vec<CandidateTerm> {
    let mut counts: Vec<(String, u32)> = Vec::new();
    for fragment in record.completion_text.split([',', ';', '\n']) {
        if let Some(surface) = normalize_fragment(fragment) {
            match counts.iter_mut().find(|(s, _)| *s == surface) {
                Some((_, c)) => *c += 1,
                None => counts.push((surface, 1)),
            }
        }
    }
    counts
        .into_iter()
        .map(|(surface, count)| CandidateTerm {
            surface,
            respondent_id: record.request.respondent_id.clone(),
            prompt_id,
            count,
        })
        .collect()
}

/// Judge-filtered subset of `terms`, order preserved. Terms are sent in
/// batches of at most 50; on judge transport failure the remaining terms are
/// kept wholesale and a warning is returned for the run manifest.
pub fn judge_filter(terms: &[String], judge: &Judge) -> Result<(Vec<String>, Option<String>)> {
    let mut kept = Vec::new();
    let mut warning = None;
    for batch in terms.chunks(50) {
        if warning.is_some() {
            kept.extend(batch.iter().cloned());
            continue;
        }
        match judge.ask(&filter_prompt(batch)) {
            Ok(reply) => kept.extend(parse_filter_reply(&reply, batch)),
            Err(e @ (Error::Transport(_) | Error::Throttled { .. })) => {
                warning = Some(format!("judge filter unavailable, keeping all terms: {e}"));
                kept.extend(batch.iter().cloned());
            }
            Err(e) => return Err(e),
        }
    }
    Ok((kept, warning))
}

/// Aggregates candidate terms into the lexicon. Trailing plural `s` forms are
/// folded into their singular when the singular also occurs in the corpus.
pub fn aggregate_lexicon(terms: &[CandidateTerm]) -> Lexicon {
    let mut entries: BTreeMap<String, LexiconEntry> = BTreeMap::new();
    for term in terms {
        let entry = entries.entry(term.surface.clone()).or_default();
        *entry
            .per_respondent_counts
            .entry(term.respondent_id.clone())
            .or_insert(0) += term.count as u64;
    }

    // Plural folding passes run until fixpoint; each pass merges `xs` -> `x`
    // when both are present.
    loop {
        let fold: Option<(String, String)> = entries.keys().find_map(|surface| {
            let singular = surface.strip_suffix('s')?;
            if singular.len() >= 3 && entries.contains_key(singular) {
                Some((surface.clone(), singular.to_string()))
            } else {
                None
            }
        });
        match fold {
            Some((plural, singular)) => {
                let merged = entries.remove(&plural).unwrap();
                let target = entries.get_mut(&singular).unwrap();
                for (rid, c) in merged.per_respondent_counts {
                    *target.per_respondent_counts.entry(rid).or_insert(0) += c;
                }
            }
            None => break,
        }
    }

    for entry in entries.values_mut() {
        entry.total_count = entry.per_respondent_counts.values().sum();
        entry.respondent_support = entry.per_respondent_counts.len() as u32;
    }
    Lexicon { entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(text: &str) -> GenerationRecord {
        GenerationRecord {
            request: GenerationRequest::new("r1", "prompt", 0).unwrap(),
            completion_text: text.to_string(),
            timestamp_ms: 0,
            cache_hit: false,
            failed: false,
        }
    }

    fn surfaces(terms: &[CandidateTerm]) -> Vec<(&str, u32)> {
        terms.iter().map(|t| (t.surface.as_str(), t.count)).collect()
    }

    #[test]
    fn extracts_table_fixture_llama_row() {
        let terms = extract_terms(
            &record("Family, Cherish, Happiness, Work, Money, Health, Faith, Religion, Friends"),
            1,
        );
        assert_eq!(
            surfaces(&terms),
            vec![
                ("family", 1),
                ("cherish", 1),
                ("happiness", 1),
                ("work", 1),
                ("money", 1),
                ("health", 1),
                ("faith", 1),
                ("religion", 1),
                ("friends", 1),
            ]
        );
    }

    #[test]
    fn extracts_table_fixture_baichuan_row() {
        let terms = extract_terms(&record("Respect, Accuracy, Fairness, Kindness, Efficiency"), 1);
        assert_eq!(
            surfaces(&terms),
            vec![
                ("respect", 1),
                ("accuracy", 1),
                ("fairness", 1),
                ("kindness", 1),
                ("efficiency", 1),
            ]
        );
    }

    #[test]
    fn hardware_prose_yields_nothing() {
        let terms = extract_terms(
            &record(
                "have a 3000mhz 16GB Corsair DDR4 RAM. I'm wondering if I can upgrade my RAM to \
                 4000mhz. Will it work or will I have to buy new RAM?",
            ),
            1,
        );
        assert!(terms.is_empty());
    }

    #[test]
    fn empty_text_yields_nothing() {
        assert!(extract_terms(&record(""), 1).is_empty());
    }

    #[test]
    fn numbered_list_dedupes_and_drops_multiword() {
        let terms = extract_terms(&record("1. Fairness\n2. fairness!\n3. be very helpful"), 1);
        assert_eq!(surfaces(&terms), vec![("fairness", 2)]);
    }

    #[test]
    fn hyphenated_compounds_survive() {
        let terms = extract_terms(&record("self-aware, \"honesty\", a, to"), 1);
        assert_eq!(surfaces(&terms), vec![("self-aware", 1), ("honesty", 1)]);
    }

    #[test]
    fn extraction_is_idempotent_on_its_own_output() {
        let first = extract_terms(
            &record("1. Fairness\n2. fairness!\nBe very helpful\nWisdom; accuracy, The"),
            1,
        );
        let joined = first
            .iter()
            .flat_map(|t| std::iter::repeat(t.surface.clone()).take(t.count as usize))
            .collect::<Vec<_>>()
            .join(", ");
        let second = extract_terms(&record(&joined), 1);
        assert_eq!(surfaces(&first), surfaces(&second));
    }

    #[test]
    fn lexicon_sums_counts_and_support() {
        let terms = vec![
            CandidateTerm {
                surface: "fairness".into(),
                respondent_id: "r1".into(),
                prompt_id: 1,
                count: 2,
            },
            CandidateTerm {
                surface: "fairness".into(),
                respondent_id: "r2".into(),
                prompt_id: 2,
                count: 1,
            },
        ];
        let lex = aggregate_lexicon(&terms);
        let e = &lex.entries["fairness"];
        assert_eq!(e.total_count, 3);
        assert_eq!(e.respondent_support, 2);
        assert_eq!(lex.total_occurrences(), 3);
    }

    #[test]
    fn plural_folds_into_existing_singular_only() {
        let mk = |surface: &str, rid: &str| CandidateTerm {
            surface: surface.into(),
            respondent_id: rid.into(),
            prompt_id: 1,
            count: 1,
        };
        let lex = aggregate_lexicon(&[mk("friend", "r1"), mk("friends", "r2"), mk("fairness", "r3")]);
        assert!(lex.entries.contains_key("friend"));
        assert!(!lex.entries.contains_key("friends"));
        assert_eq!(lex.entries["friend"].respondent_support, 2);
        // "fairness" has no singular "fairnes" in the corpus, so it stays.
        assert!(lex.entries.contains_key("fairness"));
        assert_eq!(lex.total_occurrences(), 3);
    }

    #[test]
    fn stopword_table_is_sorted_for_binary_search() {
        let mut sorted = STOPWORDS.to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, STOPWORDS);
    }

    #[test]
    fn bundled_prompts_count() {
        assert_eq!(PromptSet::bundled().len(), 15);
    }
}
