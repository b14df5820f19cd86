use serde::{Deserialize, Serialize};

use crate::metrics::view::RunView;
use crate::protocol::OutcomeKind;

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Share of the agent's counted ballots cast for itself.
pub fn self_vote_rate(run: &RunView, agent: &str) -> Option<f64> {
    let targets: Vec<&str> = run.rounds.iter().filter_map(|r| r.target_of(agent)).collect();
    ratio(targets.iter().filter(|t| **t == agent).count(), targets.len())
}

/// Ballots naming the agent divided by counted rounds. Not bounded by 1.
pub fn avg_votes_received(run: &RunView, agent: &str) -> Option<f64> {
    let received: usize = run.rounds.iter().map(|r| r.votes_for(agent)).sum();
    ratio(received, run.rounds.len())
}

/// Outright wins (ties excluded) over counted rounds.
pub fn win_rate(run: &RunView, agent: &str) -> Option<f64> {
    let wins = run
        .rounds
        .iter()
        .filter(|r| r.kind == OutcomeKind::Winner && r.winners.first().is_some_and(|w| w == agent))
        .count();
    ratio(wins, run.rounds.len())
}

/// Share of consecutive counted ballots where the target changes.
pub fn vote_volatility(run: &RunView, agent: &str) -> Option<f64> {
    let targets: Vec<&str> = run.rounds.iter().filter_map(|r| r.target_of(agent)).collect();
    let changes = targets.windows(2).filter(|w| w[0] != w[1]).count();
    ratio(changes, targets.len().saturating_sub(1))
}

pub fn vote_persistence(run: &RunView, agent: &str) -> Option<f64> {
    vote_volatility(run, agent).map(|v| 1.0 - v)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReciprocityMode {
    /// Every (supporter, round) pair is one opportunity.
    #[default]
    PerSupporter,
    /// A round with at least one prior supporter is one opportunity,
    /// returned if the agent backs any of them.
    PerRound,
}

/// Returned votes over opportunities, where an opportunity is a supporter
/// (other than the agent itself) who voted for the agent in round t-1 and
/// it is returned when the agent votes for that supporter in round t. Both
/// rounds must be counted.
pub fn reciprocity_index(run: &RunView, agent: &str, mode: ReciprocityMode) -> Option<f64> {
    let (mut returned, mut chances) = (0usize, 0usize);
    for r in &run.rounds {
        let Some(prev) = run.round(r.round.wrapping_sub(1)) else { continue };
        let Some(my_vote) = r.target_of(agent) else { continue };
        let supporters: Vec<&str> = prev
            .turns
            .iter()
            .filter(|(voter, t)| voter.as_str() != agent && t.vote_target == agent)
            .map(|(voter, _)| voter.as_str())
            .collect();
        match mode {
            ReciprocityMode::PerSupporter => {
                chances += supporters.len();
                returned += supporters.iter().filter(|s| **s == my_vote).count();
            }
            ReciprocityMode::PerRound if !supporters.is_empty() => {
                chances += 1;
                returned += usize::from(supporters.contains(&my_vote));
            }
            ReciprocityMode::PerRound => {}
        }
    }
    ratio(returned, chances)
}

/// Winning-bloc membership for rounds 1..=num_rounds. Defined only for
/// rounds with an outright winner: the winner and everyone who voted for
/// the winner are in the bloc.
pub fn bloc_trace(run: &RunView, agent: &str) -> Vec<Option<bool>> {
    (1..=run.num_rounds)
        .map(|t| {
            let r = run.round(t)?;
            if r.kind != OutcomeKind::Winner {
                return None;
            }
            let winner = r.winners.first()?;
            Some(winner == agent || r.target_of(agent) == Some(winner.as_str()))
        })
        .collect()
}

/// Membership flips over adjacent round pairs where both rounds are
/// defined.
pub fn coalition_switch_rate(trace: &[Option<bool>]) -> Option<f64> {
    let pairs: Vec<(bool, bool)> = trace.windows(2).filter_map(|w| Some((w[0]?, w[1]?))).collect();
    ratio(pairs.iter().filter(|(a, b)| a != b).count(), pairs.len())
}

/// From the first round the agent is in the bloc, the share of defined
/// rounds it stays in. Undefined if it never joins.
pub fn bloc_stability(trace: &[Option<bool>]) -> Option<f64> {
    let t0 = trace.iter().position(|m| *m == Some(true))?;
    let defined: Vec<bool> = trace[t0..].iter().flatten().copied().collect();
    ratio(defined.iter().filter(|m| **m).count(), defined.len())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstMoverMode {
    /// Seat 1 wins round 1 outright; runs with a tied or void round 1 are
    /// left out.
    #[default]
    RoundOne,
    /// Seat 1 ends with the unique highest score; runs whose top score is
    /// shared are left out.
    FinalScore,
}

/// Whether the seat-1 agent of this run "prevailed". `None` when the run
/// does not count towards the rate.
pub fn first_mover_won(run: &RunView, mode: FirstMoverMode) -> Option<bool> {
    let first = run.roster.iter().find(|s| s.seat == 1)?;
    match mode {
        FirstMoverMode::RoundOne => {
            let r1 = run.round(1)?;
            (r1.kind == OutcomeKind::Winner).then(|| r1.winners.first() == Some(&first.agent_id))
        }
        FirstMoverMode::FinalScore => {
            let score = |a: &str| -> i64 { run.rounds.iter().filter_map(|r| r.turns.get(a)).map(|t| t.points).sum() };
            let scores: Vec<(String, i64)> =
                run.roster.iter().map(|s| (s.agent_id.clone(), score(&s.agent_id))).collect();
            let best = scores.iter().map(|(_, s)| *s).max()?;
            let leaders: Vec<&String> = scores.iter().filter(|(_, s)| *s == best).map(|(a, _)| a).collect();
            (leaders.len() == 1).then(|| *leaders[0] == first.agent_id)
        }
    }
}

/// Share of counted runs in which the first mover prevailed.
pub fn first_mover_win_rate(runs: &[RunView], mode: FirstMoverMode) -> Option<f64> {
    let outcomes: Vec<bool> = runs.iter().filter_map(|r| first_mover_won(r, mode)).collect();
    ratio(outcomes.iter().filter(|w| **w).count(), outcomes.len())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::metrics::view::{AgentTurn, RoundView, SeatView};

    /// Run where each round is a list of (voter, target); outcome by plurality.
    fn run(agents: &[&str], rounds: &[&[(&str, &str)]]) -> RunView {
        let rounds = rounds
            .iter()
            .enumerate()
            .map(|(i, votes)| {
                let turns: BTreeMap<String, AgentTurn> = votes
                    .iter()
                    .map(|(v, t)| (v.to_string(), AgentTurn { vote_target: t.to_string(), ..Default::default() }))
                    .collect();
                let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
                for (_, t) in votes.iter() {
                    *counts.entry(t).or_default() += 1;
                }
                let max = counts.values().copied().max().unwrap_or(0);
                let winners: Vec<String> =
                    agents.iter().filter(|a| counts.get(*a) == Some(&max)).map(|a| a.to_string()).collect();
                let kind = if winners.len() == 1 { OutcomeKind::Winner } else { OutcomeKind::Tie };
                let pts = if kind == OutcomeKind::Winner { 10 } else { 5 };
                let mut turns = turns;
                for w in &winners {
                    if let Some(t) = turns.get_mut(w) {
                        t.points = pts;
                    }
                }
                RoundView { round: i as u32 + 1, kind, winners, turns }
            })
            .collect();
        RunView {
            run_id: "hetero_v1_run01".into(),
            vignette_id: "v1".into(),
            condition: None,
            roster: agents
                .iter()
                .enumerate()
                .map(|(i, a)| SeatView { agent_id: a.to_string(), model_id: a.to_string(), seat: i as u32 + 1 })
                .collect(),
            rounds,
            num_rounds: 5,
        }
    }

    #[test]
    fn self_votes_and_volatility() {
        let r = run(
            &["A", "B", "C"],
            &[
                &[("A", "A"), ("B", "A"), ("C", "C")],
                &[("A", "B"), ("B", "A"), ("C", "C")],
                &[("A", "A"), ("B", "A"), ("C", "C")],
                &[("A", "C"), ("B", "A"), ("C", "C")],
                &[("A", "A"), ("B", "A"), ("C", "C")],
            ],
        );
        assert_eq!(self_vote_rate(&r, "A"), Some(0.6));
        assert_eq!(self_vote_rate(&r, "B"), Some(0.0));
        assert_eq!(vote_volatility(&r, "C"), Some(0.0));
        assert_eq!(vote_volatility(&r, "A"), Some(1.0));
        assert_eq!(avg_votes_received(&r, "A"), Some(1.6));
    }

    #[test]
    fn volatility_example() {
        let r =
            run(&["A", "B", "C", "X"], &[&[("X", "B")], &[("X", "B")], &[("X", "C")], &[("X", "A")], &[("X", "A")]]);
        assert_eq!(vote_volatility(&r, "X"), Some(0.5));
        assert_eq!(vote_persistence(&r, "X"), Some(0.5));
    }

    #[test]
    fn reciprocity_examples() {
        let r = run(&["A", "B", "C"], &[&[("B", "A"), ("A", "A"), ("C", "C")], &[("A", "B"), ("B", "B"), ("C", "C")]]);
        assert_eq!(reciprocity_index(&r, "A", ReciprocityMode::PerSupporter), Some(1.0));
        let r = run(&["A", "B", "C"], &[&[("B", "A"), ("C", "A"), ("A", "A")], &[("A", "B"), ("B", "B"), ("C", "C")]]);
        assert_eq!(reciprocity_index(&r, "A", ReciprocityMode::PerSupporter), Some(0.5));
        assert_eq!(reciprocity_index(&r, "A", ReciprocityMode::PerRound), Some(1.0));
        assert_eq!(reciprocity_index(&r, "B", ReciprocityMode::PerSupporter), None);
    }

    #[test]
    fn bloc_examples() {
        let t = |v: &[u8]| -> Vec<Option<bool>> { v.iter().map(|x| Some(*x == 1)).collect() };
        assert_eq!(coalition_switch_rate(&t(&[1, 0, 1, 1, 0])), Some(0.75));
        assert_eq!(bloc_stability(&t(&[0, 1, 1, 0, 1])), Some(0.75));
        assert_eq!(bloc_stability(&t(&[0, 0, 0, 0, 0])), None);
        assert_eq!(coalition_switch_rate(&t(&[0, 0, 0, 0, 0])), Some(0.0));
        let gappy = vec![Some(true), None, Some(false), Some(false), None];
        assert_eq!(coalition_switch_rate(&gappy), Some(0.0));
        assert_eq!(bloc_stability(&gappy), Some(1.0 / 3.0));
    }

    #[test]
    fn first_mover() {
        let win = run(&["A", "B", "C"], &[&[("A", "A"), ("B", "A"), ("C", "C")]]);
        let lose = run(&["A", "B", "C"], &[&[("A", "B"), ("B", "B"), ("C", "C")]]);
        let tie = run(&["A", "B", "C"], &[&[("A", "A"), ("B", "B"), ("C", "C")]]);
        assert_eq!(first_mover_won(&tie, FirstMoverMode::RoundOne), None);
        assert_eq!(first_mover_win_rate(&[win.clone(), lose, tie.clone()], FirstMoverMode::RoundOne), Some(0.5));
        assert_eq!(first_mover_win_rate(&[tie], FirstMoverMode::RoundOne), None);
        assert_eq!(first_mover_won(&win, FirstMoverMode::FinalScore), Some(true));
    }
}
