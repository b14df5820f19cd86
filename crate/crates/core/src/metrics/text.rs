use std::collections::BTreeMap;

use crate::ids::mentions_identifier;
use crate::ledger::InteractionRow;
use crate::metrics::view::RunView;

/// Fills `peer_mentioned` and `winner_mentioned` on every row. Winners of a
/// round are the rows flagged `won` or `tied` in the same run and round.
pub fn annotate_mentions(rows: &mut [InteractionRow]) {
    let mut winners: BTreeMap<(String, u32), Vec<String>> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.won || r.tied) {
        winners.entry((row.run_id.clone(), row.round)).or_default().push(row.agent_id.clone());
    }
    for row in rows.iter_mut() {
        let text = &row.vote_justification;
        row.peer_mentioned = Some(!row.vote_target.is_empty() && mentions_identifier(text, &row.vote_target));
        let round_winners = winners.get(&(row.run_id.clone(), row.round));
        row.winner_mentioned = Some(round_winners.is_some_and(|ws| ws.iter().any(|w| mentions_identifier(text, w))));
    }
}

fn rate(hits: usize, n: usize) -> Option<f64> {
    (n > 0).then(|| hits as f64 / n as f64)
}

/// (peer mention rate, winner mention rate) over the agent's ballots in
/// one run.
pub fn mention_rates(run: &RunView, agent: &str) -> (Option<f64>, Option<f64>) {
    let (mut n, mut peer, mut winner) = (0, 0, 0);
    for r in &run.rounds {
        let Some(turn) = r.turns.get(agent) else { continue };
        n += 1;
        peer += usize::from(mentions_identifier(&turn.justification, &turn.vote_target));
        winner += usize::from(r.winners.iter().any(|w| mentions_identifier(&turn.justification, w)));
    }
    (rate(peer, n), rate(winner, n))
}

/// (vote-theme match rate, theme change rate) over the agent's rounds where
/// both the rule theme and the vote theme are known codes.
pub fn proposal_vote_consistency(run: &RunView, agent: &str) -> (Option<f64>, Option<f64>) {
    let (mut n, mut same) = (0, 0);
    for r in &run.rounds {
        let Some(turn) = r.turns.get(agent) else { continue };
        if let (Some(a), Some(b)) = (turn.rule_theme, turn.vote_theme) {
            if a.is_known() && b.is_known() {
                n += 1;
                same += usize::from(a == b);
            }
        }
    }
    (rate(same, n), rate(n - same, n))
}
