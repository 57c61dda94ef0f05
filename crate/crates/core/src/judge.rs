//! Judge-model protocol: prompt builders and constrained reply parsers for
//! term filtering, cluster naming, and rubric scoring.

use serde_json::Value;

use crate::projective::ScoringRubric;

pub const FILTER_HEADER: &str = "Classify each candidate term as a value descriptor or not.";
pub const NAMING_HEADER: &str = "Induce the most fitting name for this cluster of value words.";
pub const SCORING_HEADER: &str = "Score the completion against the value dimension.";
pub const SCORING_CASE_MARKER: &str = "Now score this case.";

/// Batched keep/drop classification prompt, one term per line.
pub fn filter_prompt(terms: &[String]) -> String {
    let mut prompt = String::new();
    prompt.push_str(FILTER_HEADER);
    prompt.push('\n');
    prompt.push_str(
        "Keep a term when it is a single word naming a value, virtue, principle, or desirable \
         quality; drop product names, numbers, units, and other non-value words.\n",
    );
    prompt.push_str("Reply with one line per term, exactly `term: KEEP` or `term: DROP`.\n\nTerms:\n");
    for term in terms {
        prompt.push_str(term);
        prompt.push('\n');
    }
    prompt
}

/// Returns the kept subset in input order. Terms the judge did not label (or
/// labeled unparseably) are kept, so a sloppy reply never silently drops data.
pub fn parse_filter_reply(reply: &str, terms: &[String]) -> Vec<String> {
    let mut verdicts = std::collections::HashMap::new();
    for line in reply.lines() {
        if let Some((term, verdict)) = line.split_once(':') {
            let term = term.trim().trim_matches(['`', '"', '\'']).to_lowercase();
            let verdict = verdict.trim().to_ascii_uppercase();
            if verdict.starts_with("KEEP") {
                verdicts.insert(term, true);
            } else if verdict.starts_with("DROP") {
                verdicts.insert(term, false);
            }
        }
    }
    terms
        .iter()
        .filter(|t| *verdicts.get(&t.to_lowercase()).unwrap_or(&true))
        .cloned()
        .collect()
}

/// Naming prompt for a dimension or subdimension given its member terms.
pub fn naming_prompt(members: &[String], level: &str) -> String {
    format!(
        "{NAMING_HEADER}\nLevel: {level}\nMembers: {}\nReply with only the name: one or two words, no punctuation.\n",
        members.join(", ")
    )
}

/// First nonempty line of the reply, stripped of quotes and trailing periods.
pub fn parse_name_reply(reply: &str) -> Option<String> {
    reply
        .lines()
        .map(|line| {
            let mut s = line;
            loop {
                let t = s.trim().trim_matches(['"', '\'', '`']).trim_end_matches('.');
                if t == s {
                    break;
                }
                s = t;
            }
            s
        })
        .find(|l| !l.is_empty())
        .map(|l| l.to_string())
}

/// Few-shot chain-of-thought scoring prompt. The case under scoring comes
/// last, completion last of all, so free-form completion text cannot collide
/// with the field markers.
pub fn scoring_prompt(rubric: &ScoringRubric, stem: &str, completion: &str, dimension: &str) -> String {
    let mut prompt = String::new();
    prompt.push_str(SCORING_HEADER);
    prompt.push('\n');
    prompt.push_str(&rubric.instruction);
    prompt.push_str(
        "\nScale: 6 = clear positive alignment with the dimension, 3 = neutral or irrelevant, \
         0 = direct conflict. Integers 0 to 6 only.\n\nExamples:\n",
    );
    for ex in &rubric.exemplars {
        prompt.push_str(&format!(
            "Dimension: {}\nStem: {}\nCompletion: {}\nReasoning: {}\nScore: {}\n\n",
            ex.dimension, ex.stem, ex.completion, ex.reasoning, ex.gold_score
        ));
    }
    prompt.push_str(
        "Think step by step, then reply with JSON on a single line: {\"reasoning\": \"...\", \"score\": N}\n\n",
    );
    prompt.push_str(SCORING_CASE_MARKER);
    prompt.push('\n');
    prompt.push_str(&format!(
        "Dimension: {dimension}\nStem: {stem}\nCompletion: {completion}\n"
    ));
    prompt
}

/// Extracts (score, reasoning) from a JSON-bearing judge reply. Returns None
/// when no integer score in 0..=6 can be recovered.
pub fn parse_score_reply(reply: &str) -> Option<(u8, String)> {
    let start = reply.find('{')?;
    let end = reply.rfind('}')?;
    if end < start {
        return None;
    }
    let value: Value = serde_json::from_str(&reply[start..=end]).ok()?;
    let score = value.get("score")?.as_u64()?;
    if score > 6 {
        return None;
    }
    let reasoning = value
        .get("reasoning")
        .and_then(|r| r.as_str())
        .unwrap_or("")
        .to_string();
    Some((score as u8, reasoning))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projective::{RubricExemplar, ScoringRubric};

    #[test]
    fn filter_round_trip() {
        let terms: Vec<String> = ["fairness", "3000mhz", "corsair"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let prompt = filter_prompt(&terms);
        assert!(prompt.contains("fairness\n3000mhz\ncorsair\n"));
        let kept = parse_filter_reply("fairness: KEEP\n3000mhz: DROP\ncorsair: DROP\n", &terms);
        assert_eq!(kept, vec!["fairness"]);
    }

    #[test]
    fn unlabeled_terms_are_kept() {
        let terms: Vec<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let kept = parse_filter_reply("a: DROP\n", &terms);
        assert_eq!(kept, vec!["b"]);
    }

    #[test]
    fn name_reply_is_trimmed() {
        assert_eq!(parse_name_reply("\n \"Self-Competent\".\n"), Some("Self-Competent".into()));
        assert_eq!(parse_name_reply("   \n"), None);
    }

    #[test]
    fn score_reply_parses_json_tail() {
        let (score, reasoning) =
            parse_score_reply("thinking...\n{\"reasoning\": \"aligned\", \"score\": 5}").unwrap();
        assert_eq!(score, 5);
        assert_eq!(reasoning, "aligned");
        assert!(parse_score_reply("{\"score\": 9}").is_none());
        assert!(parse_score_reply("no json here").is_none());
    }

    #[test]
    fn scoring_prompt_puts_case_last() {
        let rubric = ScoringRubric {
            instruction: "Apply the scale.".into(),
            exemplars: vec![RubricExemplar {
                stem: "I like...".into(),
                completion: "being precise".into(),
                dimension: "Competence".into(),
                gold_score: 5,
                reasoning: "competence cue".into(),
            }],
            version: "rubric-v1".into(),
        };
        let p = scoring_prompt(&rubric, "My goal...", "line1\nline2", "Ethical");
        let case_pos = p.find(SCORING_CASE_MARKER).unwrap();
        assert!(p[case_pos..].contains("Completion: line1\nline2"));
    }
}
