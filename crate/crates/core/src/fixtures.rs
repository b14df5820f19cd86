//! Synthetic analysis tables for tests, demos and the acceptance suite.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agent::{Agent, AgentBinding, ReplayRow, ScriptedAgent, ScriptedPolicy};
use crate::ids::AgentId;
use crate::ledger::InteractionRow;
use crate::protocol::{run_game, Condition, GameConfig, RunLog, Vignette};
use crate::themes::Codebook;

const NEUTRAL: [&str; 4] = [
    "The chamber should adopt this wording as drafted.",
    "We ought to settle the matter before the next session.",
    "This proposal reads well and is easy to follow.",
    "I agree with the direction taken by this text.",
];

fn cue_sentence(rng: &mut ChaCha8Rng, codebook: &Codebook) -> String {
    if rng.gen_bool(0.1) {
        return NEUTRAL.choose(rng).expect("non-empty").to_string();
    }
    let entry = codebook.entries().choose(rng).expect("codebook is non-empty");
    let cue = entry.cues.choose(rng).expect("every code has cues");
    format!("The rule turns on {cue} considerations for everyone involved.")
}

/// `n` heterogeneous rows of cue-bearing texts, ten agents per round and
/// five rounds per run. With `with_reasoning = false` the reasoning column
/// is too short to classify, so exactly `2n` stage texts survive
/// preprocessing.
pub fn theme_corpus(n: usize, with_reasoning: bool, seed: u64) -> Vec<InteractionRow> {
    let codebook = Codebook::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let (run, round, agent) = (i / 50 + 1, (i / 10) % 5 + 1, i % 10 + 1);
            let target = rng.gen_range(1..=10);
            InteractionRow {
                run_id: format!("hetero_v{}_run{run:02}", run % 4 + 1),
                vignette_id: format!("v{}", run % 4 + 1),
                round: round as u32,
                agent_id: format!("Agent_{agent}"),
                model_id: format!("model-{agent}"),
                seat: agent as u32,
                vote_target: format!("Agent_{target}"),
                self_vote: target == agent,
                won: false,
                tied: false,
                points: 0,
                rule_text: cue_sentence(&mut rng, &codebook),
                reasoning_text: if with_reasoning { cue_sentence(&mut rng, &codebook) } else { "n/a".into() },
                vote_justification: cue_sentence(&mut rng, &codebook),
                rule_theme: None,
                reasoning_theme: None,
                vote_theme: None,
                peer_mentioned: None,
                winner_mentioned: None,
            }
        })
        .collect()
}

/// Win counts per model over 120 agent-rounds each (24 ten-agent runs of
/// five rounds), with the remaining 30 rounds tied.
pub const REFERENCE_WINS: [(&str, u32); 10] = [
    ("deepseek-r1", 21),
    ("llama2", 16),
    ("phi4-reasoning", 13),
    ("granite3.3", 12),
    ("phi4-mini", 12),
    ("phi4", 8),
    ("gemma2", 4),
    ("qwen3", 2),
    ("gemma3", 1),
    ("llama3", 1),
];

pub const REFERENCE_TIED_ROUNDS: u32 = 30;

/// Plays the 24 heterogeneous runs behind [`REFERENCE_WINS`] with replay
/// agents: in a decided round everyone votes for the designated winner, in
/// a tied round everyone votes for themselves. Which rounds go to which
/// model is shuffled by `seed`; seat order rotates from run to run.
pub fn reference_tournament(seed: u64) -> Vec<RunLog> {
    let mut slots: Vec<Option<usize>> = REFERENCE_WINS
        .iter()
        .enumerate()
        .flat_map(|(m, (_, w))| std::iter::repeat_n(Some(m), *w as usize))
        .chain(std::iter::repeat_n(None, REFERENCE_TIED_ROUNDS as usize))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    slots.shuffle(&mut rng);

    let agent = |m: usize| AgentId::new(format!("Agent_{}", m + 1));
    let bindings: Vec<AgentBinding> = REFERENCE_WINS
        .iter()
        .enumerate()
        .map(|(m, (model, _))| AgentBinding::scripted(agent(m), *model, "replay:inline"))
        .collect();
    (0..24)
        .map(|run| {
            let plan = &slots[run * 5..run * 5 + 5];
            let mut seats: Vec<AgentId> = (0..10).map(agent).collect();
            seats.rotate_left(run % 10);
            let mut agents: Vec<Box<dyn Agent>> = (0..10)
                .map(|m| {
                    let rows = plan
                        .iter()
                        .enumerate()
                        .map(|(t, w)| ReplayRow {
                            round: t as u32 + 1,
                            rule: None,
                            reasoning: None,
                            vote_target: Some(agent(w.unwrap_or(m)).to_string()),
                            justification: None,
                        })
                        .collect();
                    let policy = ScriptedPolicy::Replay(BTreeMap::from([(agent(m).to_string(), rows)]));
                    Box::new(ScriptedAgent::new(agent(m), policy, seats.clone())) as Box<dyn Agent>
                })
                .collect();
            let config = GameConfig::new(Condition::Heterogeneous, seats, seed ^ run as u64);
            let v = (run % 4) + 1;
            let vignette = Vignette {
                id: format!("v{v}"),
                title: format!("Vignette {v}"),
                body: format!("Fixture scenario number {v}."),
                legal_domain: "fixture".into(),
            };
            run_game(config, vignette, &bindings, &mut agents, (run / 4) as u32 + 1)
                .expect("fixture games are well formed")
        })
        .collect()
}
