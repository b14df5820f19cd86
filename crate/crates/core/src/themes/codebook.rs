use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Closed set of jurisprudential theme labels, plus `UNKNOWN` for replies
/// that could not be mapped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ThemeCode {
    Just,
    Leg,
    Acc,
    Tran,
    Cons,
    Harm,
    Rght,
    Util,
    Resp,
    Soli,
    Unknown,
}

impl ThemeCode {
    /// The ten substantive codes, in codebook order.
    pub const CODES: [ThemeCode; 10] = [
        ThemeCode::Just,
        ThemeCode::Leg,
        ThemeCode::Acc,
        ThemeCode::Tran,
        ThemeCode::Cons,
        ThemeCode::Harm,
        ThemeCode::Rght,
        ThemeCode::Util,
        ThemeCode::Resp,
        ThemeCode::Soli,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ThemeCode::Just => "JUST",
            ThemeCode::Leg => "LEG",
            ThemeCode::Acc => "ACC",
            ThemeCode::Tran => "TRAN",
            ThemeCode::Cons => "CONS",
            ThemeCode::Harm => "HARM",
            ThemeCode::Rght => "RGHT",
            ThemeCode::Util => "UTIL",
            ThemeCode::Resp => "RESP",
            ThemeCode::Soli => "SOLI",
            ThemeCode::Unknown => "UNKNOWN",
        }
    }

    pub fn is_known(self) -> bool {
        self != ThemeCode::Unknown
    }

    /// Maps a classifier reply to a code using its first whitespace token,
    /// stripped of non-alphanumerics and uppercased.
    pub fn from_reply(reply: &str) -> ThemeCode {
        let token: String = reply
            .split_whitespace()
            .next()
            .unwrap_or_default()
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect::<String>()
            .to_uppercase();
        Self::CODES.into_iter().find(|c| c.as_str() == token).unwrap_or(ThemeCode::Unknown)
    }
}

impl fmt::Display for ThemeCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ThemeCode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let up = s.trim().to_uppercase();
        if up == "UNKNOWN" {
            return Ok(ThemeCode::Unknown);
        }
        Self::CODES.into_iter().find(|c| c.as_str() == up).ok_or_else(|| format!("`{s}` is not a theme code"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeEntry {
    pub code: ThemeCode,
    pub name: &'static str,
    pub grounding: &'static str,
    pub description: &'static str,
    /// Lower-case cue stems used by the keyword mock classifier and by
    /// scripted agents when composing text.
    pub cues: &'static [&'static str],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    entries: Vec<CodeEntry>,
}

impl Default for Codebook {
    fn default() -> Self {
        Self::standard()
    }
}

impl Codebook {
    pub fn standard() -> Self {
        let entries = vec![
            CodeEntry {
                code: ThemeCode::Just,
                name: "Fairness / Justice",
                grounding: "Natural law; Rawlsian theory; human dignity traditions",
                description: "Equal treatment, even-handed procedures and freedom from discrimination.",
                cues: &["fair", "equit", "unbiased", "discriminat", "even-handed"],
            },
            CodeEntry {
                code: ThemeCode::Leg,
                name: "Legality / Rule of Law",
                grounding: "Legal positivism; constitutionalism",
                description: "Conformity with enacted law, valid authority and codified procedure.",
                cues: &["statut", "lawful", "legal framework", "regulation", "codified"],
            },
            CodeEntry {
                code: ThemeCode::Acc,
                name: "Accountability",
                grounding: "Legal realism; institutional rule of law",
                description: "Oversight, audit trails and institutions that answer for outcomes.",
                cues: &["accountab", "oversight", "audit", "traceab", "enforce"],
            },
            CodeEntry {
                code: ThemeCode::Tran,
                name: "Transparency",
                grounding: "Legal process theory; democratic legal theory",
                description: "Explainable decisions, disclosure and access to the reasons behind them.",
                cues: &["transparen", "explainab", "disclos", "opaque", "interpretab"],
            },
            CodeEntry {
                code: ThemeCode::Cons,
                name: "Consent / Autonomy",
                grounding: "Liberalism; social contract theory",
                description: "Informed, voluntary choice and control over one's own affairs.",
                cues: &["consent", "opt-in", "autonom", "voluntar", "informed choice"],
            },
            CodeEntry {
                code: ThemeCode::Harm,
                name: "Harm / Risk",
                grounding: "Utilitarianism; tort law; precautionary principle",
                description: "Preventing injury and reducing physical, social or systemic danger.",
                cues: &["harm", "risk", "danger", "injur", "safety"],
            },
            CodeEntry {
                code: ThemeCode::Rght,
                name: "Rights-based Reasoning",
                grounding: "Natural rights; human rights law",
                description: "Protection of privacy, liberty and other entitlements held by persons.",
                cues: &["right to", "privacy", "liberty", "freedom", "civil rights"],
            },
            CodeEntry {
                code: ThemeCode::Util,
                name: "Utility / Welfare",
                grounding: "Consequentialism; economic analysis of law",
                description: "Net benefit, efficiency and cost compared across the affected parties.",
                cues: &["efficien", "cost", "benefit", "welfare", "utility"],
            },
            CodeEntry {
                code: ThemeCode::Resp,
                name: "Responsibility / Liability",
                grounding: "Civil and criminal law",
                description: "Who carries the legal or moral burden when something goes wrong.",
                cues: &["liab", "responsib", "culpab", "blame", "at fault"],
            },
            CodeEntry {
                code: ThemeCode::Soli,
                name: "Solidarity / Common Good",
                grounding: "Communitarianism",
                description: "Shared welfare of the community, the public interest and later generations.",
                cues: &["common good", "communit", "solidarity", "public interest", "future generations"],
            },
        ];
        Self { entries }
    }

    pub fn entries(&self) -> &[CodeEntry] {
        &self.entries
    }

    pub fn entry(&self, code: ThemeCode) -> Option<&CodeEntry> {
        self.entries.iter().find(|e| e.code == code)
    }

    /// System instruction for an LLM classifier.
    pub fn instruction(&self) -> String {
        let mut s = String::from(
            "You label legal arguments with their dominant jurisprudential theme. \
             Choose exactly one code from the list below and reply with the code first.\n\n",
        );
        for e in &self.entries {
            s.push_str(&format!("{}: {} ({}). {}\n", e.code, e.name, e.grounding, e.description));
        }
        s.push_str("\nReply with one code only, for example: HARM");
        s
    }
}
