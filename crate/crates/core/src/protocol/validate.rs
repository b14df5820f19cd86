use std::collections::BTreeMap;

use crate::ids::AgentId;
use crate::protocol::tally::{award_points, check_score_conservation, tally};
use crate::protocol::types::{OutcomeKind, RunLog, SCHEMA_VERSION};
use crate::protocol::ProtocolError;

impl RunLog {
    /// Re-derives everything that can be re-derived from a log and checks
    /// it against what is stored: round count, seats, re-tallied outcomes,
    /// point awards, score conservation and final scores.
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |msg: String| Err(ProtocolError::Validation(format!("{}: {msg}", self.run_id)));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("unsupported schema version {}", self.schema_version));
        }
        self.config.validate().map_err(|e| ProtocolError::Validation(format!("{}: {e}", self.run_id)))?;
        if self.rounds.len() != self.config.num_rounds as usize {
            return bad(format!("{} rounds recorded, {} configured", self.rounds.len(), self.config.num_rounds));
        }
        let seats: Vec<AgentId> = self.roster.iter().map(|r| r.agent_id.clone()).collect();
        if seats != self.config.seat_order {
            return bad("roster does not follow the seat order".into());
        }
        if self.roster.iter().enumerate().any(|(i, r)| r.seat != i as u32 + 1) {
            return bad("seats are not numbered 1..n in order".into());
        }
        let mut totals: BTreeMap<AgentId, i64> = seats.iter().map(|a| (a.clone(), 0)).collect();
        for (i, r) in self.rounds.iter().enumerate() {
            if r.round != i as u32 + 1 {
                return bad(format!("round {} stored at position {}", r.round, i + 1));
            }
            if r.excluded {
                if r.outcome.kind != OutcomeKind::Undecided || !r.outcome.winners.is_empty() {
                    return bad(format!("excluded round {} has a decided outcome", r.round));
                }
            } else {
                if r.proposals.iter().any(|p| !p.parse_ok) {
                    return bad(format!("round {} counts despite a failed proposal", r.round));
                }
                let again = tally(&r.ballots, &seats)
                    .map_err(|e| ProtocolError::Validation(format!("{} round {}: {e}", self.run_id, r.round)))?;
                if again != r.outcome {
                    return bad(format!("round {} outcome does not match its ballots", r.round));
                }
            }
            if r.outcome.total_votes() as usize != r.ballots.len() {
                return bad(format!("round {} vote counts do not sum to the ballots cast", r.round));
            }
            if award_points(&r.outcome, &self.config) != r.point_deltas {
                return bad(format!("round {} point deltas do not follow the scoring rule", r.round));
            }
            check_score_conservation(r, &self.config)
                .map_err(|e| ProtocolError::Validation(format!("{}: {e}", self.run_id)))?;
            for (a, d) in &r.point_deltas {
                *totals.entry(a.clone()).or_insert(0) += d;
            }
        }
        if totals != self.final_scores {
            return bad("final scores differ from the sum of round deltas".into());
        }
        Ok(())
    }
}
