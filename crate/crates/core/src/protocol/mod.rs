//! The turn-based propose/justify/vote game: configuration and log types,
//! plurality tally and scoring, and the round loop that drives agents.

mod game;
mod tally;
mod types;
mod validate;

use thiserror::Error;

pub use game::{new_game, run_game, run_round, GameState, ATTEMPTS};
pub use tally::{award_points, check_score_conservation, tally, undecided};
pub use types::{
    run_id, Ballot, Condition, GameConfig, Outcome, OutcomeKind, Proposal, RosterEntry, RoundRecord, RunLog, Vignette,
    DEFAULT_POINTS_TIE, DEFAULT_POINTS_WIN, DEFAULT_ROUNDS, SCHEMA_VERSION,
};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("invalid run log: {0}")]
    Validation(String),
}
