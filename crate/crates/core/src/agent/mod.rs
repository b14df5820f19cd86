//! Agents that take part in a game: the [`Agent`] contract, conversation
//! memory, prompt rendering, reply parsing, scripted test agents and the
//! HTTP chat backend.

mod backend;
mod memory;
mod parse;
mod prompt;
mod ratelimit;
mod scripted;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{AgentId, ModelId};
use crate::protocol::{Proposal, RoundRecord, Vignette};

pub use backend::{BackendAgent, BackendClient, BackendError, InvocationParams, BACKEND_URL_ENV};
pub use memory::{AgentMemory, ChatMessage, Role};
pub use parse::{parse_ballot, parse_proposal, resolve_target, strip_think, ParseFailure};
pub use prompt::{render_prompt, RenderedPrompt, TemplateSet, EMPTY_HISTORY};
pub use ratelimit::{Clock, ManualClock, RateLimiter, SystemClock};
pub use scripted::{FailingAgent, ReplayRow, ScriptedAgent, ScriptedPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Propose,
    Vote,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Propose => "propose",
            Phase::Vote => "vote",
        })
    }
}

/// Everything an agent may look at when acting. Borrowed from the game
/// state; agents cannot mutate it.
#[derive(Debug, Clone, Copy)]
pub struct PromptContext<'a> {
    pub vignette: &'a Vignette,
    /// Completed rounds, oldest first.
    pub transcript: &'a [RoundRecord],
    pub scores: &'a BTreeMap<AgentId, i64>,
    pub phase: Phase,
    pub self_id: &'a AgentId,
    pub round: u32,
    pub num_rounds: u32,
    /// Proposals already made this round (all of them in the vote phase).
    pub current_proposals: &'a [Proposal],
    /// Agents that may be voted for; empty in the propose phase.
    pub valid_targets: &'a [AgentId],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProposalDraft {
    pub rule: String,
    pub reasoning: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BallotDraft {
    pub target: AgentId,
    pub justification: String,
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("unparseable reply: {0}")]
    Parse(#[from] ParseFailure),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("scripted failure: {0}")]
    Scripted(String),
    #[error("configuration error: {0}")]
    Config(String),
}

/// One seat-holder. Implementations keep their own conversation memory and
/// must forget it on [`Agent::reset`].
pub trait Agent: Send {
    fn id(&self) -> &AgentId;
    fn propose(&mut self, ctx: &PromptContext<'_>) -> Result<ProposalDraft, AgentError>;
    fn vote(&mut self, ctx: &PromptContext<'_>) -> Result<BallotDraft, AgentError>;
    fn memory(&self) -> &AgentMemory;
    fn reset(&mut self);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Scripted,
    Stochastic,
    Backend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentBinding {
    pub agent_id: AgentId,
    pub model_id: ModelId,
    pub kind: AgentKind,
    /// Kind-specific settings, e.g. `policy = "vote_for_seat:2"`.
    #[serde(default)]
    pub policy_params: BTreeMap<String, String>,
}

impl AgentBinding {
    pub fn scripted(agent_id: impl Into<AgentId>, model_id: impl Into<ModelId>, policy: &str) -> Self {
        let kind = if policy.starts_with("uniform_random") { AgentKind::Stochastic } else { AgentKind::Scripted };
        Self {
            agent_id: agent_id.into(),
            model_id: model_id.into(),
            kind,
            policy_params: BTreeMap::from([("policy".to_string(), policy.to_string())]),
        }
    }

    pub fn backend(agent_id: impl Into<AgentId>, model_id: impl Into<ModelId>) -> Self {
        Self {
            agent_id: agent_id.into(),
            model_id: model_id.into(),
            kind: AgentKind::Backend,
            policy_params: BTreeMap::new(),
        }
    }
}

/// Builds a live agent from its binding. Backend bindings need a shared
/// client and template set.
pub fn build_agent(
    binding: &AgentBinding,
    seat_order: &[AgentId],
    backend: Option<(&Arc<BackendClient>, &Arc<TemplateSet>)>,
) -> Result<Box<dyn Agent>, AgentError> {
    match binding.kind {
        AgentKind::Scripted | AgentKind::Stochastic => {
            let policy = binding
                .policy_params
                .get("policy")
                .ok_or_else(|| AgentError::Config(format!("scripted agent `{}` has no policy", binding.agent_id)))?;
            let policy = ScriptedPolicy::parse(policy)?;
            Ok(Box::new(ScriptedAgent::new(binding.agent_id.clone(), policy, seat_order.to_vec())))
        }
        AgentKind::Backend => {
            let (client, templates) = backend.ok_or_else(|| {
                AgentError::Config(format!("backend agent `{}` needs a backend client", binding.agent_id))
            })?;
            Ok(Box::new(BackendAgent::new(
                binding.agent_id.clone(),
                binding.model_id.clone(),
                Arc::clone(client),
                Arc::clone(templates),
            )))
        }
    }
}
