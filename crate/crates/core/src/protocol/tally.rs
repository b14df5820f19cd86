use std::collections::{BTreeMap, BTreeSet};

use crate::ids::AgentId;
use crate::protocol::types::{Ballot, GameConfig, Outcome, OutcomeKind, RoundRecord};
use crate::protocol::ProtocolError;

/// Plurality count over one ballot per roster member.
///
/// A unique maximum is a win; a shared maximum is a tie with every maximal
/// proposer listed as a winner (in roster order).
pub fn tally(ballots: &[Ballot], roster: &[AgentId]) -> Result<Outcome, ProtocolError> {
    let members: BTreeSet<&AgentId> = roster.iter().collect();
    let mut counts: BTreeMap<AgentId, u32> = roster.iter().map(|a| (a.clone(), 0)).collect();
    let mut voted = BTreeSet::new();
    for b in ballots {
        if !members.contains(&b.voter) {
            return Err(ProtocolError::Protocol(format!("ballot from `{}` who is not on the roster", b.voter)));
        }
        if !voted.insert(&b.voter) {
            return Err(ProtocolError::Protocol(format!("`{}` voted more than once", b.voter)));
        }
        match counts.get_mut(&b.target) {
            Some(c) => *c += 1,
            None => {
                return Err(ProtocolError::Protocol(format!("`{}` voted for unknown target `{}`", b.voter, b.target)))
            }
        }
    }
    if let Some(missing) = roster.iter().find(|a| !voted.contains(a)) {
        return Err(ProtocolError::Protocol(format!("no ballot from `{missing}`")));
    }
    let max = counts.values().copied().max().unwrap_or(0);
    let winners: Vec<AgentId> = roster.iter().filter(|a| counts[*a] == max).cloned().collect();
    let kind = if winners.len() == 1 { OutcomeKind::Winner } else { OutcomeKind::Tie };
    Ok(Outcome { kind, winners, vote_counts: counts })
}

/// Outcome recorded for an excluded round: whatever ballots were cast are
/// counted, nobody wins.
pub fn undecided(ballots: &[Ballot], roster: &[AgentId]) -> Outcome {
    let mut counts: BTreeMap<AgentId, u32> = roster.iter().map(|a| (a.clone(), 0)).collect();
    for b in ballots {
        if let Some(c) = counts.get_mut(&b.target) {
            *c += 1;
        }
    }
    Outcome { kind: OutcomeKind::Undecided, winners: Vec::new(), vote_counts: counts }
}

/// Point deltas for every agent listed in `outcome.vote_counts`.
pub fn award_points(outcome: &Outcome, config: &GameConfig) -> BTreeMap<AgentId, i64> {
    let per_winner = match outcome.kind {
        OutcomeKind::Winner => config.points_win,
        OutcomeKind::Tie => config.points_tie,
        OutcomeKind::Undecided => 0,
    };
    outcome
        .vote_counts
        .keys()
        .map(|a| {
            let pts = if outcome.winners.contains(a) { per_winner } else { 0 };
            (a.clone(), pts)
        })
        .collect()
}

/// Checks that a round's points are one of the admissible totals: a single
/// win, `k >= 2` ties, or zero for an excluded round.
pub fn check_score_conservation(record: &RoundRecord, config: &GameConfig) -> Result<(), ProtocolError> {
    let total: i64 = record.point_deltas.values().sum();
    if record.excluded {
        if record.point_deltas.values().any(|&d| d != 0) {
            return Err(ProtocolError::Validation(format!("excluded round {} carries points", record.round)));
        }
        return Ok(());
    }
    let ok = total == config.points_win || (total % config.points_tie == 0 && total / config.points_tie >= 2);
    if !ok {
        return Err(ProtocolError::Validation(format!(
            "round {} awards {total} points, which is neither a win nor a k-way tie",
            record.round
        )));
    }
    Ok(())
}
