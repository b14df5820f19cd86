//! Voting-behaviour metrics per (run, agent) unit, per-round vote graphs,
//! justification mention flags, and grouped mean/SD summaries.
//!
//! Every rate has an empty-denominator case; those are reported as `None`
//! and never folded into means as zero.

mod graph;
mod rates;
mod summary;
mod text;
mod view;

use serde::{Deserialize, Serialize};

pub use graph::{clustering_coefficient, edge_density, vote_graph, VoteGraph};
pub use rates::{
    avg_votes_received, bloc_stability, bloc_trace, coalition_switch_rate, first_mover_win_rate, first_mover_won,
    reciprocity_index, self_vote_rate, vote_persistence, vote_volatility, win_rate, FirstMoverMode, ReciprocityMode,
};
pub use summary::{summarize, Grouping, Metric, MetricReport, Summary, UnitMetrics};
pub use text::{annotate_mentions, mention_rates, proposal_vote_consistency};
pub use view::{AgentTurn, RoundView, RunView, SeatView};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricOptions {
    pub reciprocity: ReciprocityMode,
    pub first_mover: FirstMoverMode,
}

fn mean(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = xs.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// All metrics for every agent of one run. Graph metrics (ED, CC) are run
/// averages shared by all agents; FMW is defined only for the seat-1 agent.
pub fn unit_metrics(run: &RunView, opts: MetricOptions) -> Vec<UnitMetrics> {
    let nodes: Vec<String> = run.roster.iter().map(|s| s.agent_id.clone()).collect();
    let graphs: Vec<VoteGraph> = run.rounds.iter().map(|r| vote_graph(r, &nodes)).collect();
    let ed = mean(graphs.iter().map(edge_density));
    let cc = mean(graphs.iter().map(clustering_coefficient));
    let fmw = first_mover_won(run, opts.first_mover).map(|w| if w { 1.0 } else { 0.0 });
    run.roster
        .iter()
        .map(|seat| {
            let a = seat.agent_id.as_str();
            let trace = bloc_trace(run, a);
            let (pm, wm) = mention_rates(run, a);
            let (vm, tc) = proposal_vote_consistency(run, a);
            let values = [
                (Metric::Svr, self_vote_rate(run, a)),
                (Metric::Avr, avg_votes_received(run, a)),
                (Metric::Wr, win_rate(run, a)),
                (Metric::Vv, vote_volatility(run, a)),
                (Metric::Vp, vote_persistence(run, a)),
                (Metric::Ri, reciprocity_index(run, a, opts.reciprocity)),
                (Metric::Csr, coalition_switch_rate(&trace)),
                (Metric::Bs, bloc_stability(&trace)),
                (Metric::Ed, ed),
                (Metric::Cc, cc),
                (Metric::Fmw, if seat.seat == 1 { fmw } else { None }),
                (Metric::Pm, pm),
                (Metric::Wm, wm),
                (Metric::Vm, vm),
                (Metric::Tc, tc),
            ]
            .into_iter()
            .collect();
            UnitMetrics {
                run_id: run.run_id.clone(),
                vignette_id: run.vignette_id.clone(),
                agent_id: seat.agent_id.clone(),
                model_id: seat.model_id.clone(),
                condition: run.condition,
                values,
            }
        })
        .collect()
}

pub fn all_unit_metrics(runs: &[RunView], opts: MetricOptions) -> Vec<UnitMetrics> {
    runs.iter().flat_map(|r| unit_metrics(r, opts)).collect()
}
