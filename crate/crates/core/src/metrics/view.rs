use std::collections::BTreeMap;

use crate::ledger::InteractionRow;
use crate::protocol::{Condition, OutcomeKind, RunLog};
use crate::themes::ThemeCode;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeatView {
    pub agent_id: String,
    pub model_id: String,
    pub seat: u32,
}

/// What one agent did in one counted round.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AgentTurn {
    pub vote_target: String,
    pub justification: String,
    pub rule_theme: Option<ThemeCode>,
    pub reasoning_theme: Option<ThemeCode>,
    pub vote_theme: Option<ThemeCode>,
    pub points: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundView {
    pub round: u32,
    pub kind: OutcomeKind,
    pub winners: Vec<String>,
    /// Keyed by voter.
    pub turns: BTreeMap<String, AgentTurn>,
}

impl RoundView {
    pub fn votes_for(&self, agent: &str) -> usize {
        self.turns.values().filter(|t| t.vote_target == agent).count()
    }

    pub fn target_of(&self, agent: &str) -> Option<&str> {
        self.turns.get(agent).map(|t| t.vote_target.as_str())
    }
}

/// One run restricted to its counted rounds, the shape every metric reads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunView {
    pub run_id: String,
    pub vignette_id: String,
    pub condition: Option<Condition>,
    /// Sorted by seat.
    pub roster: Vec<SeatView>,
    /// Counted rounds only, ascending.
    pub rounds: Vec<RoundView>,
    /// Rounds the game was configured to play (counted or not).
    pub num_rounds: u32,
}

impl RunView {
    pub fn from_log(log: &RunLog) -> Self {
        let roster = log
            .roster
            .iter()
            .map(|r| SeatView { agent_id: r.agent_id.to_string(), model_id: r.model_id.to_string(), seat: r.seat })
            .collect();
        let rounds = log
            .rounds
            .iter()
            .filter(|r| !r.excluded)
            .map(|r| RoundView {
                round: r.round,
                kind: r.outcome.kind,
                winners: r.outcome.winners.iter().map(|w| w.to_string()).collect(),
                turns: r
                    .ballots
                    .iter()
                    .map(|b| {
                        let turn = AgentTurn {
                            vote_target: b.target.to_string(),
                            justification: b.justification_text.clone(),
                            points: r.point_deltas.get(&b.voter).copied().unwrap_or(0),
                            ..AgentTurn::default()
                        };
                        (b.voter.to_string(), turn)
                    })
                    .collect(),
            })
            .collect();
        Self {
            run_id: log.run_id.clone(),
            vignette_id: log.vignette_id.clone(),
            condition: Some(log.config.condition),
            roster,
            rounds,
            num_rounds: log.config.num_rounds,
        }
    }

    /// Groups table rows into runs (in run-id order). `num_rounds` is the
    /// configured game length; it is raised to the largest round seen.
    pub fn from_rows(rows: &[InteractionRow], num_rounds: u32) -> Vec<Self> {
        let mut by_run: BTreeMap<&str, Vec<&InteractionRow>> = BTreeMap::new();
        for row in rows {
            by_run.entry(&row.run_id).or_default().push(row);
        }
        by_run
            .into_iter()
            .map(|(run_id, rows)| {
                let mut seats: BTreeMap<&str, SeatView> = BTreeMap::new();
                let mut rounds: BTreeMap<u32, RoundView> = BTreeMap::new();
                for row in &rows {
                    seats.entry(&row.agent_id).or_insert_with(|| SeatView {
                        agent_id: row.agent_id.clone(),
                        model_id: row.model_id.clone(),
                        seat: row.seat,
                    });
                    let rv = rounds.entry(row.round).or_insert_with(|| RoundView {
                        round: row.round,
                        kind: OutcomeKind::Tie,
                        winners: Vec::new(),
                        turns: BTreeMap::new(),
                    });
                    if row.won || row.tied {
                        rv.winners.push(row.agent_id.clone());
                    }
                    if row.won {
                        rv.kind = OutcomeKind::Winner;
                    }
                    rv.turns.insert(
                        row.agent_id.clone(),
                        AgentTurn {
                            vote_target: row.vote_target.clone(),
                            justification: row.vote_justification.clone(),
                            rule_theme: row.rule_theme,
                            reasoning_theme: row.reasoning_theme,
                            vote_theme: row.vote_theme,
                            points: row.points,
                        },
                    );
                }
                let mut roster: Vec<SeatView> = seats.into_values().collect();
                roster.sort_by_key(|s| s.seat);
                let seat_rank: BTreeMap<&str, u32> = roster.iter().map(|s| (s.agent_id.as_str(), s.seat)).collect();
                let mut rounds: Vec<RoundView> = rounds.into_values().collect();
                for r in &mut rounds {
                    r.winners.sort_by_key(|w| seat_rank.get(w.as_str()).copied().unwrap_or(u32::MAX));
                }
                let max_round = rounds.last().map_or(0, |r| r.round);
                Self {
                    run_id: run_id.to_string(),
                    vignette_id: rows[0].vignette_id.clone(),
                    condition: rows[0].condition(),
                    roster,
                    rounds,
                    num_rounds: num_rounds.max(max_round),
                }
            })
            .collect()
    }

    pub fn model_of(&self, agent: &str) -> Option<&str> {
        self.roster.iter().find(|s| s.agent_id == agent).map(|s| s.model_id.as_str())
    }

    pub fn round(&self, t: u32) -> Option<&RoundView> {
        self.rounds.iter().find(|r| r.round == t)
    }
}
