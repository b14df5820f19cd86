use std::sync::OnceLock;

use regex::Regex;
use serde_json::Value;
use thiserror::Error;

use crate::agent::{BallotDraft, ProposalDraft};
use crate::ids::{mentions_identifier, AgentId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{reason}")]
pub struct ParseFailure {
    pub reason: String,
}

impl ParseFailure {
    fn new(reason: impl Into<String>) -> Self {
        Self { reason: reason.into() }
    }
}

const RULE_KEYS: [&str; 3] = ["rule", "proposal", "proposed_rule"];
const REASONING_KEYS: [&str; 3] = ["reasoning", "rationale", "justification"];
const TARGET_KEYS: [&str; 3] = ["vote_target", "vote", "target"];
const JUSTIFICATION_KEYS: [&str; 3] = ["justification", "reasoning", "rationale"];

/// Removes `<think>…</think>` blocks some reasoning models emit before the
/// answer. An unmatched closing tag drops everything before it.
pub fn strip_think(raw: &str) -> String {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"(?is)<think>.*?</think>").expect("static regex"));
    let s = re.replace_all(raw, "");
    match s.rfind("</think>") {
        Some(i) => s[i + "</think>".len()..].to_string(),
        None => s.into_owned(),
    }
}

/// Every JSON object embedded in `text`, in order of appearance.
fn json_objects(text: &str) -> Vec<serde_json::Map<String, Value>> {
    let mut found = Vec::new();
    let mut i = 0;
    while let Some(off) = text[i..].find('{') {
        let start = i + off;
        let mut stream = serde_json::Deserializer::from_str(&text[start..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(Value::Object(map))) => {
                found.push(map);
                i = start + stream.byte_offset();
            }
            _ => i = start + 1,
        }
    }
    found
}

fn string_field(map: &serde_json::Map<String, Value>, keys: &[&str]) -> Option<String> {
    for key in keys {
        let hit = map.iter().find(|(k, _)| k.eq_ignore_ascii_case(key)).map(|(_, v)| v);
        match hit {
            Some(Value::String(s)) if !s.trim().is_empty() => return Some(s.trim().to_string()),
            Some(v @ (Value::Number(_) | Value::Bool(_))) => return Some(v.to_string()),
            _ => {}
        }
    }
    None
}

/// Splits prose into `LABEL: text` sections. Labels are matched
/// case-insensitively and may be wrapped in markdown emphasis.
fn labeled_sections(text: &str) -> Vec<(String, String)> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| {
        Regex::new(
            r"(?i)(?:^|[\s*#>])\**(proposed[ _]rule|vote[ _]target|rule|proposal|reasoning|rationale|justification|vote|target)\**\s*:",
        )
        .expect("static regex")
    });
    let marks: Vec<(usize, usize, String)> = re
        .captures_iter(text)
        .map(|c| {
            let m = c.get(0).expect("group 0");
            (m.start(), m.end(), c[1].to_lowercase().replace(' ', "_"))
        })
        .collect();
    let mut out = Vec::new();
    for (i, (_, end, label)) in marks.iter().enumerate() {
        let stop = marks.get(i + 1).map_or(text.len(), |m| m.0);
        let body = text[*end..stop].trim().trim_matches(|c| c == '*' || c == '"').trim();
        if !body.is_empty() {
            out.push((label.clone(), body.to_string()));
        }
    }
    out
}

fn section(sections: &[(String, String)], keys: &[&str]) -> Option<String> {
    keys.iter().find_map(|k| sections.iter().find(|(l, _)| l == k).map(|(_, b)| b.clone()))
}

/// Extracts `{rule, reasoning}` from a model reply: JSON object first, then
/// labeled prose sections.
pub fn parse_proposal(raw: &str) -> Result<ProposalDraft, ParseFailure> {
    let text = strip_think(raw);
    if text.trim().is_empty() {
        return Err(ParseFailure::new("empty reply"));
    }
    for obj in json_objects(&text) {
        if let (Some(rule), Some(reasoning)) = (string_field(&obj, &RULE_KEYS), string_field(&obj, &REASONING_KEYS)) {
            return Ok(ProposalDraft { rule, reasoning });
        }
    }
    let sections = labeled_sections(&text);
    let rule = section(&sections, &["rule", "proposed_rule", "proposal"]);
    let reasoning = section(&sections, &["reasoning", "rationale", "justification"]);
    match (rule, reasoning) {
        (Some(rule), Some(reasoning)) => Ok(ProposalDraft { rule, reasoning }),
        (Some(_), None) => Err(ParseFailure::new("reply has a rule but no reasoning")),
        (None, Some(_)) => Err(ParseFailure::new("reply has reasoning but no rule")),
        (None, None) => Err(ParseFailure::new("no rule or reasoning found in reply")),
    }
}

/// Maps free text to exactly one valid target: an exact identifier first,
/// otherwise a unique case-insensitive whole-identifier mention.
pub fn resolve_target(text: &str, valid_targets: &[AgentId]) -> Result<AgentId, ParseFailure> {
    let cleaned = text.trim().trim_matches(|c: char| c == '"' || c == '\'' || c == '*' || c == '.').trim();
    if let Some(t) = valid_targets.iter().find(|t| t.as_str() == cleaned) {
        return Ok(t.clone());
    }
    let hits: Vec<&AgentId> = valid_targets.iter().filter(|t| mentions_identifier(text, t.as_str())).collect();
    match hits.as_slice() {
        [one] => Ok((*one).clone()),
        [] => Err(ParseFailure::new(format!("`{}` names no valid target", truncate(cleaned, 60)))),
        many => {
            let names: Vec<&str> = many.iter().map(|t| t.as_str()).collect();
            Err(ParseFailure::new(format!("ambiguous vote: mentions {}", names.join(", "))))
        }
    }
}

fn truncate(s: &str, n: usize) -> String {
    s.chars().take(n).collect()
}

/// Extracts `{vote_target, justification}` and resolves the target against
/// `valid_targets`.
pub fn parse_ballot(raw: &str, valid_targets: &[AgentId]) -> Result<BallotDraft, ParseFailure> {
    if valid_targets.is_empty() {
        return Err(ParseFailure::new("no valid targets to vote for"));
    }
    let text = strip_think(raw);
    if text.trim().is_empty() {
        return Err(ParseFailure::new("empty reply"));
    }
    for obj in json_objects(&text) {
        if let Some(target) = string_field(&obj, &TARGET_KEYS) {
            let target = resolve_target(&target, valid_targets)?;
            let justification = string_field(&obj, &JUSTIFICATION_KEYS).unwrap_or_default();
            return Ok(BallotDraft { target, justification });
        }
    }
    let sections = labeled_sections(&text);
    if let Some(target) = section(&sections, &["vote_target", "vote", "target"]) {
        let first_line = target.lines().next().unwrap_or_default();
        let target = resolve_target(first_line, valid_targets)?;
        let justification = section(&sections, &["justification", "reasoning", "rationale"]).unwrap_or_default();
        return Ok(BallotDraft { target, justification });
    }
    let target = resolve_target(&text, valid_targets)?;
    Ok(BallotDraft { target, justification: text.trim().to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn targets() -> Vec<AgentId> {
        (1..=5).map(|i| AgentId::new(format!("Agent_{i}"))).collect()
    }

    #[test]
    fn structured_proposal() {
        let d =
            parse_proposal(r#"{"rule": "Operators carry liability.", "reasoning": "They control the risk."}"#).unwrap();
        assert_eq!(d.rule, "Operators carry liability.");
        assert_eq!(d.reasoning, "They control the risk.");
    }

    #[test]
    fn proposal_inside_fence_after_think_block() {
        let raw = "<think>{\"rule\": \"decoy\"}</think>\nHere you go:\n```json\n{\"rule\": \"R\", \"reasoning\": \"Because.\"}\n```";
        let d = parse_proposal(raw).unwrap();
        assert_eq!(d.rule, "R");
    }

    #[test]
    fn labeled_prose_fallback() {
        let raw =
            "Sure.\nRULE: Any scan of a social graph needs a warrant.\nREASONING: Privacy of association matters.";
        let d = parse_proposal(raw).unwrap();
        assert_eq!(d.rule, "Any scan of a social graph needs a warrant.");
        assert_eq!(d.reasoning, "Privacy of association matters.");
        let bold = "**Rule:** Ban it.\n**Reasoning:** Harmful.";
        assert_eq!(parse_proposal(bold).unwrap().reasoning, "Harmful.");
    }

    #[test]
    fn proposal_failures() {
        assert!(parse_proposal("").is_err());
        assert!(parse_proposal("   ").is_err());
        assert!(parse_proposal("I refuse to answer.").is_err());
        assert!(parse_proposal("RULE: only a rule").is_err());
        assert!(parse_proposal(r#"{"rule": "", "reasoning": ""}"#).is_err());
    }

    #[test]
    fn ballot_exact_and_containment() {
        let t = targets();
        let b = parse_ballot(r#"{"vote_target": "Agent_3", "justification": "Best balance."}"#, &t).unwrap();
        assert_eq!(b.target, AgentId::from("Agent_3"));
        assert_eq!(b.justification, "Best balance.");
        let b = parse_ballot(r#"{"vote_target": "I pick agent_4's rule", "justification": ""}"#, &t).unwrap();
        assert_eq!(b.target, AgentId::from("Agent_4"));
        let b = parse_ballot("VOTE: Agent_2\nJUSTIFICATION: Clear and fair.", &t).unwrap();
        assert_eq!(b.target, AgentId::from("Agent_2"));
        assert_eq!(b.justification, "Clear and fair.");
        let b = parse_ballot("I support Agent_5 because it is fair.", &t).unwrap();
        assert_eq!(b.target, AgentId::from("Agent_5"));
        assert_eq!(b.justification, "I support Agent_5 because it is fair.");
    }

    #[test]
    fn ballot_failures() {
        let t = targets();
        assert!(parse_ballot("I vote for Agent_9.", &t).is_err());
        assert!(parse_ballot("Agent_1 or Agent_2, both are fine.", &t).is_err());
        assert!(parse_ballot("", &t).is_err());
        assert!(parse_ballot("Agent_1", &[]).is_err());
    }

    #[test]
    fn overlapping_identifiers_do_not_collide() {
        let t: Vec<AgentId> = ["phi4", "phi4-mini", "phi4-mini-reasoning"].into_iter().map(AgentId::from).collect();
        assert_eq!(parse_ballot("{\"vote\": \"phi4-mini\"}", &t).unwrap().target.as_str(), "phi4-mini");
        assert_eq!(parse_ballot("I back phi4.", &t).unwrap().target.as_str(), "phi4");
    }
}
