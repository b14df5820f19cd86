use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ids::{AgentId, ModelId};
use crate::protocol::ProtocolError;

/// Version tag written into every serialized run log.
pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_ROUNDS: u32 = 5;
pub const DEFAULT_POINTS_WIN: i64 = 10;
pub const DEFAULT_POINTS_TIE: i64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    #[serde(alias = "homo")]
    Homogeneous,
    #[serde(alias = "hetero")]
    Heterogeneous,
}

impl Condition {
    /// Short tag used in file names and run ids.
    pub fn short(self) -> &'static str {
        match self {
            Condition::Homogeneous => "homo",
            Condition::Heterogeneous => "hetero",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

impl FromStr for Condition {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "homo" | "homogeneous" => Ok(Condition::Homogeneous),
            "hetero" | "heterogeneous" => Ok(Condition::Heterogeneous),
            other => Err(ProtocolError::Config(format!("unknown condition `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub num_agents: usize,
    pub num_rounds: u32,
    pub points_win: i64,
    pub points_tie: i64,
    pub condition: Condition,
    pub seat_order: Vec<AgentId>,
    pub rng_seed: u64,
    #[serde(default)]
    pub backend_params: BTreeMap<String, serde_json::Value>,
}

impl GameConfig {
    /// Five rounds, 10 points for a win and 5 for a tie.
    pub fn new(condition: Condition, seat_order: Vec<AgentId>, rng_seed: u64) -> Self {
        Self {
            num_agents: seat_order.len(),
            num_rounds: DEFAULT_ROUNDS,
            points_win: DEFAULT_POINTS_WIN,
            points_tie: DEFAULT_POINTS_TIE,
            condition,
            seat_order,
            rng_seed,
            backend_params: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.num_agents == 0 {
            return Err(ProtocolError::Config("num_agents must be positive".into()));
        }
        if self.num_rounds == 0 {
            return Err(ProtocolError::Config("num_rounds must be at least 1".into()));
        }
        if !(self.points_win > self.points_tie && self.points_tie > 0) {
            return Err(ProtocolError::Config(format!(
                "need points_win > points_tie > 0, got {} and {}",
                self.points_win, self.points_tie
            )));
        }
        if self.seat_order.len() != self.num_agents {
            return Err(ProtocolError::Config(format!(
                "seat order lists {} agents but num_agents is {}",
                self.seat_order.len(),
                self.num_agents
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for a in &self.seat_order {
            if !seen.insert(a) {
                return Err(ProtocolError::Config(format!("agent `{a}` appears twice in seat order")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vignette {
    pub id: String,
    pub title: String,
    pub body: String,
    pub legal_domain: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub round: u32,
    pub proposer: AgentId,
    pub rule_text: String,
    pub reasoning_text: String,
    pub parse_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ballot {
    pub round: u32,
    pub voter: AgentId,
    pub target: AgentId,
    pub justification_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeKind {
    Winner,
    Tie,
    /// Reserved for excluded rounds.
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub kind: OutcomeKind,
    pub winners: Vec<AgentId>,
    pub vote_counts: BTreeMap<AgentId, u32>,
}

impl Outcome {
    pub fn is_decided(&self) -> bool {
        self.kind == OutcomeKind::Winner
    }

    pub fn total_votes(&self) -> u32 {
        self.vote_counts.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub proposals: Vec<Proposal>,
    pub ballots: Vec<Ballot>,
    pub outcome: Outcome,
    pub point_deltas: BTreeMap<AgentId, i64>,
    pub excluded: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclusion_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub agent_id: AgentId,
    pub model_id: ModelId,
    /// 1-based position in the seat order.
    pub seat: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub schema_version: u32,
    pub run_id: String,
    pub run_index: u32,
    pub vignette_id: String,
    pub config: GameConfig,
    pub roster: Vec<RosterEntry>,
    pub rounds: Vec<RoundRecord>,
    pub final_scores: BTreeMap<AgentId, i64>,
}

impl Vignette {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.id.trim().is_empty() {
            return Err(ProtocolError::Config("vignette id is empty".into()));
        }
        if self.body.trim().is_empty() {
            return Err(ProtocolError::Config(format!("vignette `{}` has an empty body", self.id)));
        }
        Ok(())
    }
}

impl RunLog {
    pub fn condition(&self) -> Condition {
        self.config.condition
    }

    pub fn seat_one(&self) -> Option<&AgentId> {
        self.roster.iter().find(|r| r.seat == 1).map(|r| &r.agent_id)
    }

    pub fn model_of(&self, agent: &AgentId) -> Option<&ModelId> {
        self.roster.iter().find(|r| &r.agent_id == agent).map(|r| &r.model_id)
    }
}

/// `<condition>_<vignette>_run<NN>`
pub fn run_id(condition: Condition, vignette_id: &str, run_index: u32) -> String {
    format!("{}_{}_run{:02}", condition.short(), vignette_id, run_index)
}
