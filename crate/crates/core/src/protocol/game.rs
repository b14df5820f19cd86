use std::collections::{BTreeMap, BTreeSet};

use crate::agent::{Agent, AgentBinding, Phase, PromptContext};
use crate::ids::{AgentId, ModelId};
use crate::protocol::tally::{award_points, tally, undecided};
use crate::protocol::types::{
    run_id, Ballot, Condition, GameConfig, Proposal, RosterEntry, RoundRecord, RunLog, Vignette, SCHEMA_VERSION,
};
use crate::protocol::ProtocolError;

/// Calls an agent gets per turn before the round is excluded.
pub const ATTEMPTS: u32 = 3;

/// Mutable state of one game. Owned by the game loop; agents only ever see
/// borrowed views through [`PromptContext`].
#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    pub config: GameConfig,
    pub vignette: Vignette,
    /// Sorted by seat.
    pub roster: Vec<RosterEntry>,
    pub rounds: Vec<RoundRecord>,
    pub scores: BTreeMap<AgentId, i64>,
    /// 1-based index of the round to be played next.
    pub next_round: u32,
}

impl GameState {
    pub fn is_finished(&self) -> bool {
        self.next_round > self.config.num_rounds
    }

    fn seat_ids(&self) -> Vec<AgentId> {
        self.roster.iter().map(|r| r.agent_id.clone()).collect()
    }
}

/// Checks the roster against the configuration and sets up an empty game.
pub fn new_game(config: GameConfig, vignette: Vignette, bindings: &[AgentBinding]) -> Result<GameState, ProtocolError> {
    config.validate()?;
    vignette.validate()?;
    if bindings.len() != config.num_agents {
        return Err(ProtocolError::Config(format!(
            "roster has {} agents but the configuration asks for {}",
            bindings.len(),
            config.num_agents
        )));
    }
    let ids: BTreeSet<&AgentId> = bindings.iter().map(|b| &b.agent_id).collect();
    if ids.len() != bindings.len() {
        return Err(ProtocolError::Config("agent ids in the roster are not unique".into()));
    }
    let seats: BTreeSet<&AgentId> = config.seat_order.iter().collect();
    if ids != seats {
        return Err(ProtocolError::Config("seat order is not a permutation of the roster".into()));
    }
    let models: BTreeSet<&ModelId> = bindings.iter().map(|b| &b.model_id).collect();
    match config.condition {
        Condition::Homogeneous if models.len() != 1 => {
            return Err(ProtocolError::Config(format!(
                "homogeneous game needs a single model, roster uses {}",
                models.len()
            )))
        }
        Condition::Heterogeneous if models.len() != bindings.len() => {
            return Err(ProtocolError::Config("heterogeneous game needs a distinct model for every agent".into()))
        }
        _ => {}
    }
    let roster: Vec<RosterEntry> = config
        .seat_order
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let binding = bindings.iter().find(|b| &b.agent_id == id).expect("checked above");
            RosterEntry { agent_id: id.clone(), model_id: binding.model_id.clone(), seat: i as u32 + 1 }
        })
        .collect();
    let scores = roster.iter().map(|r| (r.agent_id.clone(), 0)).collect();
    Ok(GameState { config, vignette, roster, rounds: Vec::new(), scores, next_round: 1 })
}

fn agent_index(agents: &[Box<dyn Agent>], id: &AgentId) -> Result<usize, ProtocolError> {
    agents
        .iter()
        .position(|a| a.id() == id)
        .ok_or_else(|| ProtocolError::Config(format!("no agent instance for `{id}`")))
}

/// Plays one round: proposals in seat order (each seeing earlier ones),
/// then ballots in seat order over the full slate. A turn that still fails
/// after [`ATTEMPTS`] calls voids the round.
pub fn run_round<'s>(
    state: &'s mut GameState,
    agents: &mut [Box<dyn Agent>],
) -> Result<&'s RoundRecord, ProtocolError> {
    if state.is_finished() {
        return Err(ProtocolError::Protocol(format!("all {} rounds have been played", state.config.num_rounds)));
    }
    let round = state.next_round;
    let seats = state.seat_ids();
    let mut exclusion: Option<String> = None;

    let mut proposals: Vec<Proposal> = Vec::with_capacity(seats.len());
    for id in &seats {
        let idx = agent_index(agents, id)?;
        let mut last_err = String::new();
        let mut made = None;
        for _ in 0..ATTEMPTS {
            let ctx = PromptContext {
                vignette: &state.vignette,
                transcript: &state.rounds,
                scores: &state.scores,
                phase: Phase::Propose,
                self_id: id,
                round,
                num_rounds: state.config.num_rounds,
                current_proposals: &proposals,
                valid_targets: &[],
            };
            match agents[idx].propose(&ctx) {
                Ok(d) if !d.rule.trim().is_empty() && !d.reasoning.trim().is_empty() => {
                    made = Some(d);
                    break;
                }
                Ok(_) => last_err = "empty rule or reasoning".into(),
                Err(e) => last_err = e.to_string(),
            }
        }
        let proposal = match made {
            Some(d) => {
                Proposal { round, proposer: id.clone(), rule_text: d.rule, reasoning_text: d.reasoning, parse_ok: true }
            }
            None => {
                log::warn!("round {round}: no usable proposal from {id} after {ATTEMPTS} attempts: {last_err}");
                exclusion.get_or_insert_with(|| format!("proposal from {id} failed: {last_err}"));
                Proposal {
                    round,
                    proposer: id.clone(),
                    rule_text: String::new(),
                    reasoning_text: String::new(),
                    parse_ok: false,
                }
            }
        };
        proposals.push(proposal);
    }

    let mut ballots: Vec<Ballot> = Vec::with_capacity(seats.len());
    if exclusion.is_none() {
        let targets: Vec<AgentId> = proposals.iter().map(|p| p.proposer.clone()).collect();
        for id in &seats {
            let idx = agent_index(agents, id)?;
            let mut last_err = String::new();
            let mut cast = None;
            for _ in 0..ATTEMPTS {
                let ctx = PromptContext {
                    vignette: &state.vignette,
                    transcript: &state.rounds,
                    scores: &state.scores,
                    phase: Phase::Vote,
                    self_id: id,
                    round,
                    num_rounds: state.config.num_rounds,
                    current_proposals: &proposals,
                    valid_targets: &targets,
                };
                match agents[idx].vote(&ctx) {
                    Ok(d) if targets.contains(&d.target) => {
                        cast = Some(d);
                        break;
                    }
                    Ok(d) => last_err = format!("vote for `{}` is not a valid target", d.target),
                    Err(e) => last_err = e.to_string(),
                }
            }
            match cast {
                Some(d) => ballots.push(Ballot {
                    round,
                    voter: id.clone(),
                    target: d.target,
                    justification_text: d.justification,
                }),
                None => {
                    log::warn!("round {round}: no valid ballot from {id} after {ATTEMPTS} attempts: {last_err}");
                    exclusion = Some(format!("ballot from {id} failed: {last_err}"));
                    break;
                }
            }
        }
    }

    let excluded = exclusion.is_some();
    let outcome = if excluded { undecided(&ballots, &seats) } else { tally(&ballots, &seats)? };
    let point_deltas = award_points(&outcome, &state.config);
    for (agent, delta) in &point_deltas {
        *state.scores.entry(agent.clone()).or_insert(0) += delta;
    }
    state.rounds.push(RoundRecord {
        round,
        proposals,
        ballots,
        outcome,
        point_deltas,
        excluded,
        exclusion_reason: exclusion,
    });
    state.next_round += 1;
    Ok(state.rounds.last().expect("just pushed"))
}

/// Plays a full game. Agent memories are wiped first so nothing carries
/// over from an earlier run. Agent failures only ever void rounds; the
/// returned error is always a configuration or protocol fault.
pub fn run_game(
    config: GameConfig,
    vignette: Vignette,
    bindings: &[AgentBinding],
    agents: &mut [Box<dyn Agent>],
    run_index: u32,
) -> Result<RunLog, ProtocolError> {
    let mut state = new_game(config, vignette, bindings)?;
    for a in agents.iter_mut() {
        a.reset();
    }
    for entry in &state.roster {
        agent_index(agents, &entry.agent_id)?;
    }
    while !state.is_finished() {
        run_round(&mut state, agents)?;
    }
    let log = RunLog {
        schema_version: SCHEMA_VERSION,
        run_id: run_id(state.config.condition, &state.vignette.id, run_index),
        run_index,
        vignette_id: state.vignette.id.clone(),
        config: state.config,
        roster: state.roster,
        rounds: state.rounds,
        final_scores: state.scores,
    };
    log.validate()?;
    Ok(log)
}
