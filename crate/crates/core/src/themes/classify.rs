use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agent::{BackendClient, ChatMessage};
use crate::ids::ModelId;
use crate::ledger::InteractionRow;
use crate::themes::{Codebook, ThemeCode};

/// Texts shorter than this (in characters, after trimming) are not sent to
/// a classifier.
pub const MIN_TEXT_CHARS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Rule,
    Reasoning,
    Vote,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Rule, Stage::Reasoning, Stage::Vote];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Rule => "rule",
            Stage::Reasoning => "reasoning",
            Stage::Vote => "vote",
        }
    }

    pub fn text_of(self, row: &InteractionRow) -> &str {
        match self {
            Stage::Rule => &row.rule_text,
            Stage::Reasoning => &row.reasoning_text,
            Stage::Vote => &row.vote_justification,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rule" => Ok(Stage::Rule),
            "reasoning" => Ok(Stage::Reasoning),
            "vote" | "voting" => Ok(Stage::Vote),
            other => Err(format!("unknown stage `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RowKey {
    pub run_id: String,
    pub round: u32,
    pub agent_id: String,
}

impl RowKey {
    pub fn of(row: &InteractionRow) -> Self {
        Self { run_id: row.run_id.clone(), round: row.round, agent_id: row.agent_id.clone() }
    }
}

impl fmt::Display for RowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/r{}/{}", self.run_id, self.round, self.agent_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageText {
    pub key: RowKey,
    pub stage: Stage,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    Empty,
    TooShort,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Preprocessed {
    pub texts: Vec<StageText>,
    pub dropped: BTreeMap<(Stage, DropReason), usize>,
}

impl Preprocessed {
    pub fn dropped_total(&self) -> usize {
        self.dropped.values().sum()
    }
}

/// Splits rows into classifiable stage texts, dropping empty texts and
/// texts under [`MIN_TEXT_CHARS`]. Surviving text is passed through
/// unchanged; dropping one stage leaves the row's other stages alone.
pub fn preprocess(rows: &[InteractionRow]) -> Preprocessed {
    let mut out = Preprocessed::default();
    for row in rows {
        for stage in Stage::ALL {
            let text = stage.text_of(row);
            let len = text.trim().chars().count();
            let reason = if len == 0 {
                Some(DropReason::Empty)
            } else if len < MIN_TEXT_CHARS {
                Some(DropReason::TooShort)
            } else {
                None
            };
            match reason {
                Some(r) => *out.dropped.entry((stage, r)).or_default() += 1,
                None => out.texts.push(StageText { key: RowKey::of(row), stage, text: text.to_string() }),
            }
        }
    }
    out
}

/// Something that answers a (system, user) prompt pair with raw text.
pub trait Classifier: Send + Sync {
    fn id(&self) -> &str;
    fn reply(&self, system: &str, user: &str) -> Result<String, String>;
}

/// Deterministic offline classifier: counts codebook cue hits in the text
/// and answers with the best code (earliest code on ties) or `UNKNOWN`.
#[derive(Debug, Clone)]
pub struct MockClassifier {
    id: String,
    codebook: Codebook,
}

impl MockClassifier {
    pub fn new(id: impl Into<String>) -> Self {
        Self { id: id.into(), codebook: Codebook::standard() }
    }

    pub fn best_code(&self, text: &str) -> ThemeCode {
        let lower = text.to_lowercase();
        let mut best = (0usize, ThemeCode::Unknown);
        for e in self.codebook.entries() {
            let hits: usize = e.cues.iter().map(|c| lower.matches(c).count()).sum();
            if hits > best.0 {
                best = (hits, e.code);
            }
        }
        best.1
    }
}

impl Classifier for MockClassifier {
    fn id(&self) -> &str {
        &self.id
    }

    fn reply(&self, _system: &str, user: &str) -> Result<String, String> {
        Ok(match self.best_code(user) {
            ThemeCode::Unknown => "UNKNOWN".to_string(),
            code => format!("{code} (keyword match)"),
        })
    }
}

/// Classifier backed by a chat model on the shared backend client.
pub struct BackendClassifier {
    id: String,
    model: ModelId,
    client: Arc<BackendClient>,
}

impl BackendClassifier {
    pub fn new(model: impl Into<ModelId>, client: Arc<BackendClient>) -> Self {
        let model = model.into();
        Self { id: model.to_string(), model, client }
    }
}

impl Classifier for BackendClassifier {
    fn id(&self) -> &str {
        &self.id
    }

    fn reply(&self, system: &str, user: &str) -> Result<String, String> {
        let messages = [ChatMessage::system(system), ChatMessage::user(user)];
        self.client.complete(&self.model, &messages).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub code: ThemeCode,
    pub raw_reply: String,
    pub error: Option<String>,
}

/// Two-message classification: codebook instruction as system message, the
/// text as user message; the reply's first token decides the code.
pub fn classify(text: &str, classifier: &dyn Classifier, codebook: &Codebook) -> Classification {
    match classifier.reply(&codebook.instruction(), text) {
        Ok(raw) => Classification { code: ThemeCode::from_reply(&raw), raw_reply: raw, error: None },
        Err(e) => Classification { code: ThemeCode::Unknown, raw_reply: String::new(), error: Some(e) },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(rule: &str, reasoning: &str, vote: &str) -> InteractionRow {
        InteractionRow {
            run_id: "hetero_v1_run01".into(),
            vignette_id: "v1".into(),
            round: 1,
            agent_id: "a".into(),
            model_id: "m".into(),
            seat: 1,
            vote_target: "a".into(),
            self_vote: true,
            won: false,
            tied: true,
            points: 5,
            rule_text: rule.into(),
            reasoning_text: reasoning.into(),
            vote_justification: vote.into(),
            rule_theme: None,
            reasoning_theme: None,
            vote_theme: None,
            peer_mentioned: None,
            winner_mentioned: None,
        }
    }

    #[test]
    fn preprocess_thresholds() {
        let p = preprocess(&[row("ok", "exactly 11c", "")]);
        assert_eq!(p.texts.len(), 1);
        assert_eq!(p.texts[0].stage, Stage::Reasoning);
        assert_eq!(p.texts[0].text, "exactly 11c");
        assert_eq!(p.dropped[&(Stage::Rule, DropReason::TooShort)], 1);
        assert_eq!(p.dropped[&(Stage::Vote, DropReason::Empty)], 1);
        let ten = preprocess(&[row("0123456789", "", "")]);
        assert_eq!(ten.texts.len(), 1);
    }

    struct Fixed(&'static str);
    impl Classifier for Fixed {
        fn id(&self) -> &str {
            "fixed"
        }
        fn reply(&self, _: &str, _: &str) -> Result<String, String> {
            Ok(self.0.to_string())
        }
    }

    #[test]
    fn classification_uses_first_token() {
        let cb = Codebook::standard();
        assert_eq!(classify("whatever", &Fixed("HARM \u{2014} clearly risk"), &cb).code, ThemeCode::Harm);
        assert_eq!(classify("whatever", &Fixed("The theme is JUST"), &cb).code, ThemeCode::Unknown);
        assert_eq!(classify("whatever", &Fixed("soli"), &cb).code, ThemeCode::Soli);
        let mock = MockClassifier::new("mock");
        assert_eq!(classify("This reduces the risk of harm.", &mock, &cb).code, ThemeCode::Harm);
        assert_eq!(classify("Nothing to see in this sentence.", &mock, &cb).code, ThemeCode::Unknown);
    }
}
