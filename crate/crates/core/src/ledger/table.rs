use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ledger::LedgerError;
use crate::protocol::{Condition, OutcomeKind, RunLog};
use crate::themes::ThemeCode;

/// One agent in one counted round. Column order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionRow {
    pub run_id: String,
    pub vignette_id: String,
    pub round: u32,
    pub agent_id: String,
    pub model_id: String,
    pub seat: u32,
    pub vote_target: String,
    pub self_vote: bool,
    pub won: bool,
    pub tied: bool,
    pub points: i64,
    pub rule_text: String,
    pub reasoning_text: String,
    pub vote_justification: String,
    pub rule_theme: Option<ThemeCode>,
    pub reasoning_theme: Option<ThemeCode>,
    pub vote_theme: Option<ThemeCode>,
    pub peer_mentioned: Option<bool>,
    pub winner_mentioned: Option<bool>,
}

impl InteractionRow {
    /// Condition encoded in the run id prefix.
    pub fn condition(&self) -> Option<Condition> {
        self.run_id.split('_').next()?.parse().ok()
    }
}

/// Flattens logs into rows ordered by (run id, round, seat). Excluded
/// rounds are dropped; theme and mention columns are left empty.
pub fn export_rows(logs: &[RunLog]) -> Vec<InteractionRow> {
    let mut ordered: Vec<&RunLog> = logs.iter().collect();
    ordered.sort_by(|a, b| a.run_id.cmp(&b.run_id));
    let mut rows = Vec::new();
    for log in ordered {
        for r in log.rounds.iter().filter(|r| !r.excluded) {
            for entry in &log.roster {
                let id = &entry.agent_id;
                let proposal = r.proposals.iter().find(|p| &p.proposer == id);
                let ballot = r.ballots.iter().find(|b| &b.voter == id);
                let is_winner = r.outcome.winners.contains(id);
                rows.push(InteractionRow {
                    run_id: log.run_id.clone(),
                    vignette_id: log.vignette_id.clone(),
                    round: r.round,
                    agent_id: id.to_string(),
                    model_id: entry.model_id.to_string(),
                    seat: entry.seat,
                    vote_target: ballot.map(|b| b.target.to_string()).unwrap_or_default(),
                    self_vote: ballot.is_some_and(|b| &b.target == id),
                    won: is_winner && r.outcome.kind == OutcomeKind::Winner,
                    tied: is_winner && r.outcome.kind == OutcomeKind::Tie,
                    points: r.point_deltas.get(id).copied().unwrap_or(0),
                    rule_text: proposal.map(|p| p.rule_text.clone()).unwrap_or_default(),
                    reasoning_text: proposal.map(|p| p.reasoning_text.clone()).unwrap_or_default(),
                    vote_justification: ballot.map(|b| b.justification_text.clone()).unwrap_or_default(),
                    rule_theme: None,
                    reasoning_theme: None,
                    vote_theme: None,
                    peer_mentioned: None,
                    winner_mentioned: None,
                });
            }
        }
    }
    rows
}

pub fn write_csv(rows: &[InteractionRow], path: &Path) -> Result<(), LedgerError> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|source| LedgerError::Io { path: path.to_path_buf(), source })?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<InteractionRow>, LedgerError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BalanceReport {
    /// Rows per `model_id/agent_id`.
    pub rows_per_agent: BTreeMap<String, usize>,
    pub rows_per_run: BTreeMap<String, usize>,
    pub is_balanced: bool,
    /// (run, round) slots in `1..=num_rounds` with no rows at all.
    pub excluded_rounds: usize,
    /// Agents that break the balance: `run_id:agent_id` for a missing or
    /// duplicated row in a round the rest of the run has, and
    /// `model_id/agent_id (n rows)` for a total that differs from the most
    /// common one.
    pub offending: Vec<String>,
}

/// Balanced means every agent (keyed by model and agent id) contributes the
/// same number of rows and no agent is missing from a round its run
/// contributes. Whole rounds absent from a run count as exclusions; they
/// keep the table balanced only while they hit every agent alike.
pub fn verify_balance(rows: &[InteractionRow], num_rounds: u32) -> BalanceReport {
    let mut rows_per_agent: BTreeMap<String, usize> = BTreeMap::new();
    let mut rows_per_run: BTreeMap<String, usize> = BTreeMap::new();
    let mut run_agents: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut cells: BTreeMap<(&str, u32), BTreeMap<&str, usize>> = BTreeMap::new();
    for row in rows {
        *rows_per_agent.entry(format!("{}/{}", row.model_id, row.agent_id)).or_default() += 1;
        *rows_per_run.entry(row.run_id.clone()).or_default() += 1;
        run_agents.entry(&row.run_id).or_default().insert(&row.agent_id);
        *cells.entry((&row.run_id, row.round)).or_default().entry(&row.agent_id).or_default() += 1;
    }
    let mut offending = BTreeSet::new();
    for ((run, _round), present) in &cells {
        for agent in &run_agents[run] {
            if present.get(agent).copied().unwrap_or(0) != 1 {
                offending.insert(format!("{run}:{agent}"));
            }
        }
    }
    let mut freq: BTreeMap<usize, usize> = BTreeMap::new();
    for n in rows_per_agent.values() {
        *freq.entry(*n).or_default() += 1;
    }
    // Most common count; ties go to the larger count.
    if let Some((&modal, _)) = freq.iter().max_by_key(|(n, k)| (**k, **n)) {
        for (agent, n) in &rows_per_agent {
            if *n != modal {
                offending.insert(format!("{agent} ({n} rows)"));
            }
        }
    }
    let mut excluded_rounds = 0;
    for run in run_agents.keys() {
        let rounds: BTreeSet<u32> = cells.keys().filter(|(r, _)| r == run).map(|(_, t)| *t).collect();
        excluded_rounds += (1..=num_rounds).filter(|t| !rounds.contains(t)).count();
    }
    BalanceReport {
        rows_per_agent,
        rows_per_run,
        is_balanced: offending.is_empty(),
        excluded_rounds,
        offending: offending.into_iter().collect(),
    }
}
