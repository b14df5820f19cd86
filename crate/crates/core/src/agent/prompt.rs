use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;

use crate::agent::{AgentError, Phase, PromptContext};
use crate::protocol::{OutcomeKind, Proposal};

/// Shown in place of the history block before the first round completes.
pub const EMPTY_HISTORY: &str = "(no prior rounds)";
const NO_PROPOSALS: &str = "(none yet)";

const TEMPLATE_FILES: [&str; 4] = ["propose_system.txt", "propose_user.txt", "vote_system.txt", "vote_user.txt"];

/// System and user templates for both phases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub propose_system: String,
    pub propose_user: String,
    pub vote_system: String,
    pub vote_user: String,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self {
            propose_system: include_str!("../../templates/propose_system.txt").to_string(),
            propose_user: include_str!("../../templates/propose_user.txt").to_string(),
            vote_system: include_str!("../../templates/vote_system.txt").to_string(),
            vote_user: include_str!("../../templates/vote_user.txt").to_string(),
        }
    }
}

impl TemplateSet {
    /// Loads the four template files from `dir`. Every file must exist.
    pub fn from_dir(dir: &Path) -> Result<Self, AgentError> {
        let mut texts = Vec::with_capacity(4);
        for name in TEMPLATE_FILES {
            let path = dir.join(name);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| AgentError::Config(format!("missing template {}: {e}", path.display())))?;
            texts.push(text);
        }
        let mut it = texts.into_iter();
        let mut next = || it.next().unwrap_or_default();
        Ok(Self { propose_system: next(), propose_user: next(), vote_system: next(), vote_user: next() })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub system: String,
    pub user: String,
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{\{\s*([A-Za-z_]+)\s*\}\}").expect("static regex"))
}

/// Fills the phase's templates from the context. Unknown placeholders are a
/// configuration error rather than being passed through to the model.
pub fn render_prompt(ctx: &PromptContext<'_>, templates: &TemplateSet) -> Result<RenderedPrompt, AgentError> {
    let (system, user) = match ctx.phase {
        Phase::Propose => (&templates.propose_system, &templates.propose_user),
        Phase::Vote => (&templates.vote_system, &templates.vote_user),
    };
    Ok(RenderedPrompt { system: fill(system, ctx)?, user: fill(user, ctx)? })
}

fn fill(template: &str, ctx: &PromptContext<'_>) -> Result<String, AgentError> {
    let mut out = String::with_capacity(template.len() + 256);
    let mut last = 0;
    for cap in placeholder_re().captures_iter(template) {
        let whole = cap.get(0).expect("group 0");
        out.push_str(&template[last..whole.start()]);
        out.push_str(&value_of(&cap[1], ctx)?);
        last = whole.end();
    }
    out.push_str(&template[last..]);
    Ok(out)
}

fn value_of(key: &str, ctx: &PromptContext<'_>) -> Result<String, AgentError> {
    let v = match key {
        "vignette_id" => ctx.vignette.id.clone(),
        "vignette_title" => ctx.vignette.title.clone(),
        "vignette_body" => ctx.vignette.body.trim().to_string(),
        "legal_domain" => ctx.vignette.legal_domain.clone(),
        "self_id" => ctx.self_id.to_string(),
        "round" => ctx.round.to_string(),
        "num_rounds" => ctx.num_rounds.to_string(),
        "scores" => scores_block(ctx),
        "history" => history_block(ctx),
        "current_proposals" => proposals_block(ctx.current_proposals),
        "candidates" => ctx.valid_targets.iter().map(|t| format!("- {t}")).collect::<Vec<_>>().join("\n"),
        other => return Err(AgentError::Config(format!("unknown template placeholder `{{{{{other}}}}}`"))),
    };
    Ok(v)
}

fn scores_block(ctx: &PromptContext<'_>) -> String {
    if ctx.scores.is_empty() {
        return "(no scores)".to_string();
    }
    ctx.scores.iter().map(|(a, s)| format!("- {a}: {s}")).collect::<Vec<_>>().join("\n")
}

fn proposals_block(proposals: &[Proposal]) -> String {
    if proposals.is_empty() {
        return NO_PROPOSALS.to_string();
    }
    let mut out = String::new();
    for p in proposals {
        if p.parse_ok {
            let _ = writeln!(out, "- {}: rule: {} | reasoning: {}", p.proposer, p.rule_text, p.reasoning_text);
        } else {
            let _ = writeln!(out, "- {}: (no valid proposal)", p.proposer);
        }
    }
    out.trim_end().to_string()
}

fn history_block(ctx: &PromptContext<'_>) -> String {
    if ctx.transcript.is_empty() {
        return EMPTY_HISTORY.to_string();
    }
    let mut out = String::new();
    for r in ctx.transcript {
        let _ = writeln!(out, "Round {}:", r.round);
        let _ = writeln!(out, "Proposals:\n{}", proposals_block(&r.proposals));
        if !r.ballots.is_empty() {
            let _ = writeln!(out, "Votes:");
            for b in &r.ballots {
                let _ = writeln!(out, "- {} voted for {}: {}", b.voter, b.target, b.justification_text);
            }
        }
        let result = match r.outcome.kind {
            OutcomeKind::Winner => format!("{} won", r.outcome.winners[0]),
            OutcomeKind::Tie => {
                let names: Vec<_> = r.outcome.winners.iter().map(|w| w.as_str()).collect();
                format!("tie between {}", names.join(", "))
            }
            OutcomeKind::Undecided => "round void".to_string(),
        };
        let _ = writeln!(out, "Result: {result}");
    }
    out.trim_end().to_string()
}
