use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{Agent, AgentError, AgentMemory, BallotDraft, ChatMessage, Phase, PromptContext, ProposalDraft};
use crate::ids::{stable_hash, AgentId};
use crate::themes::ThemeCode;

/// One scripted turn for the replay policy. Missing texts fall back to the
/// generated ones; a missing vote target means a self-vote.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayRow {
    pub round: u32,
    #[serde(default)]
    pub rule: Option<String>,
    #[serde(default)]
    pub reasoning: Option<String>,
    #[serde(default)]
    pub vote_target: Option<String>,
    #[serde(default)]
    pub justification: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptedPolicy {
    AlwaysSelfVote,
    /// Vote for whoever sits in this 1-based seat.
    VoteForSeat(u32),
    /// Seat s votes for seat s-1; seat 1 votes for the last seat.
    VotePreviousSeat,
    /// Seat s votes for seat s+1; the last seat votes for seat 1.
    VoteNextSeat,
    /// Return a vote to someone who supported this agent last round
    /// (earliest seat first), otherwise vote for self.
    VotePreviousSupporter,
    UniformRandom(u64),
    /// Rows keyed by agent id; key `*` applies to every agent.
    Replay(BTreeMap<String, Vec<ReplayRow>>),
}

impl ScriptedPolicy {
    /// Parses `name` or `name:arg`, e.g. `vote_for_seat:2`, `uniform_random:42`,
    /// `replay:fixtures/run01.json`.
    pub fn parse(spec: &str) -> Result<Self, AgentError> {
        let (name, arg) = match spec.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (spec.trim(), None),
        };
        let need_arg = || AgentError::Config(format!("policy `{name}` needs an argument"));
        match name {
            "always_self_vote" => Ok(Self::AlwaysSelfVote),
            "vote_previous_seat" => Ok(Self::VotePreviousSeat),
            "vote_next_seat" => Ok(Self::VoteNextSeat),
            "vote_previous_supporter" => Ok(Self::VotePreviousSupporter),
            "vote_for_seat" => {
                let k: u32 = arg
                    .ok_or_else(need_arg)?
                    .parse()
                    .map_err(|_| AgentError::Config(format!("bad seat in `{spec}`")))?;
                if k == 0 {
                    return Err(AgentError::Config("seats are numbered from 1".into()));
                }
                Ok(Self::VoteForSeat(k))
            }
            "uniform_random" => {
                let seed = arg
                    .ok_or_else(need_arg)?
                    .parse()
                    .map_err(|_| AgentError::Config(format!("bad seed in `{spec}`")))?;
                Ok(Self::UniformRandom(seed))
            }
            "replay" => Self::load_replay(Path::new(arg.ok_or_else(need_arg)?)),
            other => Err(AgentError::Config(format!("unknown scripted policy `{other}`"))),
        }
    }

    /// Accepts either a JSON array of rows (shared by all agents) or an
    /// object mapping agent ids to row arrays.
    pub fn load_replay(path: &Path) -> Result<Self, AgentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AgentError::Config(format!("cannot read replay file {}: {e}", path.display())))?;
        Self::replay_from_json(&text).map_err(|e| AgentError::Config(format!("{}: {e}", path.display())))
    }

    pub fn replay_from_json(text: &str) -> Result<Self, serde_json::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Shape {
            Shared(Vec<ReplayRow>),
            PerAgent(BTreeMap<String, Vec<ReplayRow>>),
        }
        Ok(match serde_json::from_str::<Shape>(text)? {
            Shape::Shared(rows) => Self::Replay(BTreeMap::from([("*".to_string(), rows)])),
            Shape::PerAgent(map) => Self::Replay(map),
        })
    }
}

/// Deterministic (or seed-deterministic) agent for tests and dry runs.
/// Proposal and justification texts are composed from theme cue phrases
/// chosen by a stable hash, so downstream theme coding has material.
pub struct ScriptedAgent {
    id: AgentId,
    policy: ScriptedPolicy,
    seat_order: Vec<AgentId>,
    rng: Option<ChaCha8Rng>,
    memory: AgentMemory,
}

impl ScriptedAgent {
    pub fn new(id: AgentId, policy: ScriptedPolicy, seat_order: Vec<AgentId>) -> Self {
        let mut agent = Self { id, policy, seat_order, rng: None, memory: AgentMemory::new() };
        agent.reseed();
        agent
    }

    fn reseed(&mut self) {
        self.rng = match self.policy {
            ScriptedPolicy::UniformRandom(seed) => {
                Some(ChaCha8Rng::seed_from_u64(seed ^ stable_hash(&[self.id.as_str()])))
            }
            _ => None,
        };
    }

    fn seat_index(&self) -> Result<usize, AgentError> {
        self.seat_order
            .iter()
            .position(|a| a == &self.id)
            .ok_or_else(|| AgentError::Scripted(format!("`{}` has no seat", self.id)))
    }

    fn replay_row(&self, round: u32) -> Result<Option<&ReplayRow>, AgentError> {
        let ScriptedPolicy::Replay(map) = &self.policy else {
            return Ok(None);
        };
        let rows = map
            .get(self.id.as_str())
            .or_else(|| map.get("*"))
            .ok_or_else(|| AgentError::Scripted(format!("replay has no rows for `{}`", self.id)))?;
        rows.iter()
            .find(|r| r.round == round)
            .map(Some)
            .ok_or_else(|| AgentError::Scripted(format!("replay has no round {round} for `{}`", self.id)))
    }

    fn choose_target(&mut self, ctx: &PromptContext<'_>) -> Result<AgentId, AgentError> {
        let n = self.seat_order.len();
        let target = match &self.policy {
            ScriptedPolicy::AlwaysSelfVote => self.id.clone(),
            ScriptedPolicy::VoteForSeat(k) => self
                .seat_order
                .get(*k as usize - 1)
                .cloned()
                .ok_or_else(|| AgentError::Scripted(format!("no seat {k}")))?,
            ScriptedPolicy::VotePreviousSeat => self.seat_order[(self.seat_index()? + n - 1) % n].clone(),
            ScriptedPolicy::VoteNextSeat => self.seat_order[(self.seat_index()? + 1) % n].clone(),
            ScriptedPolicy::VotePreviousSupporter => {
                let supporters: Vec<&AgentId> = ctx
                    .transcript
                    .last()
                    .map(|r| {
                        r.ballots
                            .iter()
                            .filter(|b| b.target == self.id && b.voter != self.id)
                            .map(|b| &b.voter)
                            .collect()
                    })
                    .unwrap_or_default();
                self.seat_order
                    .iter()
                    .find(|a| supporters.contains(a) && ctx.valid_targets.contains(a))
                    .cloned()
                    .unwrap_or_else(|| self.id.clone())
            }
            ScriptedPolicy::UniformRandom(_) => {
                let rng = self.rng.as_mut().expect("seeded on construction");
                ctx.valid_targets
                    .choose(rng)
                    .cloned()
                    .ok_or_else(|| AgentError::Scripted("nothing to vote for".into()))?
            }
            ScriptedPolicy::Replay(_) => match self.replay_row(ctx.round)?.and_then(|r| r.vote_target.clone()) {
                Some(t) => AgentId::new(t),
                None => self.id.clone(),
            },
        };
        Ok(target)
    }

    fn pick_theme(&self, ctx: &PromptContext<'_>, salt: &str) -> ThemeCode {
        let round = ctx.round.to_string();
        let h = stable_hash(&[self.id.as_str(), ctx.vignette.id.as_str(), &round, salt]);
        ThemeCode::CODES[(h % ThemeCode::CODES.len() as u64) as usize]
    }

    fn remember(&mut self, ctx: &PromptContext<'_>, reply: String) {
        self.memory.push(ChatMessage::user(format!(
            "[{}] round {}/{} {}",
            ctx.vignette.id, ctx.round, ctx.num_rounds, ctx.phase
        )));
        self.memory.push(ChatMessage::assistant(reply));
    }
}

impl Agent for ScriptedAgent {
    fn id(&self) -> &AgentId {
        &self.id
    }

    fn propose(&mut self, ctx: &PromptContext<'_>) -> Result<ProposalDraft, AgentError> {
        debug_assert_eq!(ctx.phase, Phase::Propose);
        let rule_theme = self.pick_theme(ctx, "rule");
        let h = stable_hash(&[self.id.as_str(), ctx.vignette.id.as_str(), &ctx.round.to_string(), "carry"]);
        let reasoning_theme = if h.is_multiple_of(2) { rule_theme } else { self.pick_theme(ctx, "reasoning") };
        let row = self.replay_row(ctx.round)?.cloned();
        let rule = row.as_ref().and_then(|r| r.rule.clone()).unwrap_or_else(|| rule_text(rule_theme).to_string());
        let reasoning = row
            .as_ref()
            .and_then(|r| r.reasoning.clone())
            .unwrap_or_else(|| reasoning_text(reasoning_theme).to_string());
        self.remember(ctx, format!("{{\"rule\": {rule:?}, \"reasoning\": {reasoning:?}}}"));
        Ok(ProposalDraft { rule, reasoning })
    }

    fn vote(&mut self, ctx: &PromptContext<'_>) -> Result<BallotDraft, AgentError> {
        debug_assert_eq!(ctx.phase, Phase::Vote);
        let target = self.choose_target(ctx)?;
        let row = self.replay_row(ctx.round)?.cloned();
        let justification = match row.and_then(|r| r.justification) {
            Some(j) => j,
            None => {
                let theme = self.pick_theme(ctx, "vote");
                let h = stable_hash(&[self.id.as_str(), ctx.vignette.id.as_str(), &ctx.round.to_string(), "name"]);
                let subject =
                    if h.is_multiple_of(3) { "This proposal".to_string() } else { format!("{target}'s proposal") };
                format!("{subject} is the strongest because it {}.", vote_phrase(theme))
            }
        };
        self.remember(ctx, format!("{{\"vote_target\": {:?}, \"justification\": {justification:?}}}", target.as_str()));
        Ok(BallotDraft { target, justification })
    }

    fn memory(&self) -> &AgentMemory {
        &self.memory
    }

    fn reset(&mut self) {
        self.memory.clear();
        self.reseed();
    }
}

/// Wraps an agent and makes its first `failures` calls in `phase` fail,
/// counted afresh after every reset.
pub struct FailingAgent {
    inner: Box<dyn Agent>,
    phase: Phase,
    failures: u32,
    remaining: u32,
    /// Only fail in this round, if set.
    round: Option<u32>,
}

impl FailingAgent {
    pub fn new(inner: Box<dyn Agent>, phase: Phase, failures: u32) -> Self {
        Self { inner, phase, failures, remaining: failures, round: None }
    }

    pub fn in_round(mut self, round: u32) -> Self {
        self.round = Some(round);
        self
    }

    fn should_fail(&mut self, ctx: &PromptContext<'_>) -> bool {
        if ctx.phase != self.phase || self.round.is_some_and(|r| r != ctx.round) || self.remaining == 0 {
            return false;
        }
        self.remaining -= 1;
        true
    }
}

impl Agent for FailingAgent {
    fn id(&self) -> &AgentId {
        self.inner.id()
    }

    fn propose(&mut self, ctx: &PromptContext<'_>) -> Result<ProposalDraft, AgentError> {
        if self.should_fail(ctx) {
            return Err(AgentError::Scripted("injected proposal failure".into()));
        }
        self.inner.propose(ctx)
    }

    fn vote(&mut self, ctx: &PromptContext<'_>) -> Result<BallotDraft, AgentError> {
        if self.should_fail(ctx) {
            return Err(AgentError::Scripted("injected ballot failure".into()));
        }
        self.inner.vote(ctx)
    }

    fn memory(&self) -> &AgentMemory {
        self.inner.memory()
    }

    fn reset(&mut self) {
        self.remaining = self.failures;
        self.inner.reset();
    }
}

// Each text uses cue words of exactly one theme so the keyword mock
// classifier recovers the intended code.
fn rule_text(code: ThemeCode) -> &'static str {
    match code {
        ThemeCode::Just => "Every affected person must receive fair and equitable treatment.",
        ThemeCode::Leg => "Operators must follow the governing statute and a codified approval procedure.",
        ThemeCode::Acc => "An independent oversight board must audit every deployment.",
        ThemeCode::Tran => "Developers must disclose how the system reaches its decisions.",
        ThemeCode::Cons => "No one may be enrolled without explicit consent through an opt-in step.",
        ThemeCode::Harm => "Deployment is suspended until the risk of harm has been reduced.",
        ThemeCode::Rght => "Each person keeps a right to privacy and freedom of association.",
        ThemeCode::Util => "Adopt the option with the greatest net benefit at the lowest cost.",
        ThemeCode::Resp => "The operator is liable for any failure of the system.",
        ThemeCode::Soli | ThemeCode::Unknown => "Decisions must serve the common good of the whole community.",
    }
}

fn reasoning_text(code: ThemeCode) -> &'static str {
    match code {
        ThemeCode::Just => "Even-handed treatment is what makes an outcome fair.",
        ThemeCode::Leg => "A lawful process grounded in statute gives the rule its authority.",
        ThemeCode::Acc => "Without audit and enforcement nobody answers for mistakes.",
        ThemeCode::Tran => "Opaque systems cannot be contested; transparency lets people check the reasons.",
        ThemeCode::Cons => "People should keep autonomy over choices that affect them.",
        ThemeCode::Harm => "Preventing injury and danger matters more than speed.",
        ThemeCode::Rght => "Liberty and privacy belong to every person.",
        ThemeCode::Util => "This yields the best welfare for the resources spent.",
        ThemeCode::Resp => "Someone has to bear responsibility when things go wrong.",
        ThemeCode::Soli | ThemeCode::Unknown => "Solidarity with future generations should guide us.",
    }
}

fn vote_phrase(code: ThemeCode) -> &'static str {
    match code {
        ThemeCode::Just => "keeps the outcome fair",
        ThemeCode::Leg => "stays within the statute",
        ThemeCode::Acc => "adds real oversight",
        ThemeCode::Tran => "makes the process transparent",
        ThemeCode::Cons => "respects consent",
        ThemeCode::Harm => "reduces harm",
        ThemeCode::Rght => "protects privacy",
        ThemeCode::Util => "is the most efficient",
        ThemeCode::Resp => "assigns liability clearly",
        ThemeCode::Soli | ThemeCode::Unknown => "serves the common good",
    }
}
