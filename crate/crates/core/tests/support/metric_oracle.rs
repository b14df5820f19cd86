//! Brute-force recount of every interaction metric from the raw run log,
//! shared by the metric tests and the acceptance suite.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use nomiclaw_core::agent::{build_agent, AgentBinding, FailingAgent, Phase};
use nomiclaw_core::ledger::{export_rows, InteractionRow};
use nomiclaw_core::metrics::{all_unit_metrics, annotate_mentions, Metric, MetricOptions, RunView, UnitMetrics};
use nomiclaw_core::protocol::{run_game, Condition, GameConfig, OutcomeKind, RunLog, Vignette};
use nomiclaw_core::themes::ThemeCode;
use nomiclaw_core::AgentId;
use proptest::test_runner::TestCaseError;
use proptest::{prop_assert, prop_assert_eq};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;

pub const POLICIES: [&str; 5] =
    ["always_self_vote", "vote_previous_seat", "vote_previous_supporter", "vote_for_seat:1", "uniform_random"];

pub fn play(seed: u64) -> RunLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=6);
    let rounds = rng.gen_range(1..=5);
    let bindings: Vec<AgentBinding> = (1..=n)
        .map(|i| {
            let mut p = POLICIES[rng.gen_range(0..POLICIES.len())].to_string();
            // Random voters dominate so that wins, ties and blocs all occur.
            if p == "uniform_random" || rng.gen_bool(0.5) {
                p = format!("uniform_random:{}", rng.gen::<u16>());
            }
            AgentBinding::scripted(format!("Agent_{i}"), format!("m{i}"), &p)
        })
        .collect();
    let seats: Vec<AgentId> = bindings.iter().map(|b| b.agent_id.clone()).collect();
    let mut agents: Vec<_> = bindings.iter().map(|b| build_agent(b, &seats, None).unwrap()).collect();
    if rng.gen_bool(0.3) {
        let k = rng.gen_range(0..n);
        let round = rng.gen_range(1..=rounds);
        let inner = agents.remove(k);
        agents.insert(k, Box::new(FailingAgent::new(inner, Phase::Vote, 3).in_round(round)));
    }
    let mut config = GameConfig::new(Condition::Heterogeneous, seats, seed);
    config.num_rounds = rounds;
    let v = Vignette { id: format!("v{}", seed % 4), title: "t".into(), body: "b".into(), legal_domain: "d".into() };
    run_game(config, v, &bindings, &mut agents, (seed % 90) as u32 + 1).unwrap()
}

pub fn random_themes(rows: &mut [InteractionRow], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let pick = |rng: &mut ChaCha8Rng| -> Option<ThemeCode> {
        match rng.gen_range(0..8) {
            0 => None,
            1 => Some(ThemeCode::Unknown),
            k => Some(ThemeCode::CODES[k % 3]),
        }
    };
    for r in rows {
        r.rule_theme = pick(&mut rng);
        r.reasoning_theme = pick(&mut rng);
        r.vote_theme = pick(&mut rng);
    }
}

fn frac(num: usize, den: usize) -> Option<f64> {
    if den == 0 {
        None
    } else {
        Some(num as f64 / den as f64)
    }
}

fn mentions(text: &str, ident: &str) -> bool {
    let re = Regex::new(&format!(r"(?i)(?:^|[^A-Za-z0-9_-]){}(?:$|[^A-Za-z0-9_-])", regex::escape(ident))).unwrap();
    re.is_match(text)
}

fn brute_cc(nodes: &[&str], edges: &BTreeSet<(&str, &str)>) -> f64 {
    let linked = |x: &str, y: &str| u32::from(edges.contains(&(x, y))) + u32::from(edges.contains(&(y, x)));
    let mut total = 0.0;
    for &i in nodes {
        let mut t = 0u32;
        for &j in nodes {
            for &h in nodes {
                if i != j && j != h && h != i {
                    t += linked(i, j) * linked(j, h) * linked(h, i);
                }
            }
        }
        let out = edges.iter().filter(|(a, _)| *a == i).count() as f64;
        let inn = edges.iter().filter(|(_, b)| *b == i).count() as f64;
        let recip = nodes.iter().filter(|&&j| edges.contains(&(i, j)) && edges.contains(&(j, i))).count() as f64;
        let d = out + inn;
        let denom = d * (d - 1.0) - 2.0 * recip;
        if denom > 0.0 {
            total += f64::from(t) / 2.0 / denom;
        }
    }
    total / nodes.len() as f64
}

pub fn oracle(log: &RunLog, rows: &[InteractionRow]) -> BTreeMap<(String, Metric), Option<f64>> {
    let agents: Vec<&str> = log.roster.iter().map(|r| r.agent_id.as_str()).collect();
    let n = agents.len();
    let counted: Vec<_> = log.rounds.iter().filter(|r| !r.excluded).collect();
    let target = |t: u32, voter: &str| -> Option<String> {
        let r = log.rounds.iter().find(|r| r.round == t && !r.excluded)?;
        r.ballots.iter().find(|b| b.voter.as_str() == voter).map(|b| b.target.as_str().to_string())
    };
    let member = |t: u32, a: &str| -> Option<bool> {
        let r = log.rounds.iter().find(|r| r.round == t && !r.excluded)?;
        if r.outcome.kind != OutcomeKind::Winner {
            return None;
        }
        let w = r.outcome.winners[0].as_str();
        Some(a == w || target(t, a).as_deref() == Some(w))
    };

    let eds: Vec<f64> = counted.iter().map(|r| r.ballots.len() as f64 / (n * (n - 1)) as f64).collect();
    let ed = frac(0, eds.len()).map(|_| eds.iter().sum::<f64>() / eds.len() as f64);
    let ccs: Vec<f64> = counted
        .iter()
        .map(|r| {
            let edges: BTreeSet<(&str, &str)> = r
                .ballots
                .iter()
                .filter(|b| b.voter != b.target)
                .map(|b| (b.voter.as_str(), b.target.as_str()))
                .collect();
            brute_cc(&agents, &edges)
        })
        .collect();
    let cc = frac(0, ccs.len()).map(|_| ccs.iter().sum::<f64>() / ccs.len() as f64);
    let seat_one = log.roster.iter().find(|r| r.seat == 1).unwrap().agent_id.as_str();
    let fmw = log
        .rounds
        .iter()
        .find(|r| r.round == 1 && !r.excluded && r.outcome.kind == OutcomeKind::Winner)
        .map(|r| if r.outcome.winners[0].as_str() == seat_one { 1.0 } else { 0.0 });

    let theme_of = |t: u32, a: &str| -> Option<(Option<ThemeCode>, Option<ThemeCode>)> {
        rows.iter().find(|r| r.round == t && r.agent_id == a).map(|r| (r.rule_theme, r.vote_theme))
    };

    let mut out = BTreeMap::new();
    for &a in &agents {
        let mut put = |m: Metric, v: Option<f64>| {
            out.insert((a.to_string(), m), v);
        };
        let seq: Vec<String> = counted.iter().filter_map(|r| target(r.round, a)).collect();
        put(Metric::Svr, frac(seq.iter().filter(|t| t.as_str() == a).count(), seq.len()));
        let received: usize = counted.iter().map(|r| r.ballots.iter().filter(|b| b.target.as_str() == a).count()).sum();
        put(Metric::Avr, frac(received, counted.len()));
        let wins = counted
            .iter()
            .filter(|r| r.outcome.kind == OutcomeKind::Winner && r.outcome.winners[0].as_str() == a)
            .count();
        put(Metric::Wr, frac(wins, counted.len()));
        let changes = (1..seq.len()).filter(|&k| seq[k] != seq[k - 1]).count();
        let vv = frac(changes, seq.len().saturating_sub(1));
        put(Metric::Vv, vv);
        put(Metric::Vp, vv.map(|v| 1.0 - v));

        let (mut chances, mut returned) = (0, 0);
        for t in 2..=log.config.num_rounds {
            for &s in &agents {
                if s != a && target(t - 1, s).as_deref() == Some(a) {
                    if let Some(mine) = target(t, a) {
                        chances += 1;
                        returned += usize::from(mine == s);
                    }
                }
            }
        }
        put(Metric::Ri, frac(returned, chances));

        let trace: Vec<Option<bool>> = (1..=log.config.num_rounds).map(|t| member(t, a)).collect();
        let (mut pairs, mut switches) = (0, 0);
        for k in 1..trace.len() {
            if let (Some(x), Some(y)) = (trace[k - 1], trace[k]) {
                pairs += 1;
                switches += usize::from(x != y);
            }
        }
        put(Metric::Csr, frac(switches, pairs));
        let bs = trace.iter().position(|m| *m == Some(true)).and_then(|t0| {
            let after: Vec<bool> = trace[t0..].iter().filter_map(|m| *m).collect();
            frac(after.iter().filter(|m| **m).count(), after.len())
        });
        put(Metric::Bs, bs);
        put(Metric::Ed, ed);
        put(Metric::Cc, cc);
        put(Metric::Fmw, if a == seat_one { fmw } else { None });

        let (mut nb, mut pm, mut wm) = (0, 0, 0);
        let (mut nt, mut same) = (0, 0);
        for r in &counted {
            let Some(b) = r.ballots.iter().find(|b| b.voter.as_str() == a) else { continue };
            nb += 1;
            pm += usize::from(mentions(&b.justification_text, b.target.as_str()));
            let winners: Vec<&AgentId> = match r.outcome.kind {
                OutcomeKind::Undecided => vec![],
                _ => r.outcome.winners.iter().collect(),
            };
            wm += usize::from(winners.iter().any(|w| mentions(&b.justification_text, w.as_str())));
            if let Some((Some(x), Some(y))) = theme_of(r.round, a) {
                if x != ThemeCode::Unknown && y != ThemeCode::Unknown {
                    nt += 1;
                    same += usize::from(x == y);
                }
            }
        }
        put(Metric::Pm, frac(pm, nb));
        put(Metric::Wm, frac(wm, nb));
        put(Metric::Vm, frac(same, nt));
        put(Metric::Tc, frac(nt - same, nt));
    }
    out
}

pub fn close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => (x - y).abs() < 1e-12,
        _ => false,
    }
}

pub fn check(seed: u64) -> Result<(), TestCaseError> {
    let log = play(seed);
    let mut rows = export_rows(std::slice::from_ref(&log));
    random_themes(&mut rows, seed);
    annotate_mentions(&mut rows);
    let want = oracle(&log, &rows);

    let from_rows: Vec<UnitMetrics> =
        all_unit_metrics(&RunView::from_rows(&rows, log.config.num_rounds), MetricOptions::default());
    let from_log: Vec<UnitMetrics> = all_unit_metrics(&[RunView::from_log(&log)], MetricOptions::default());
    if rows.is_empty() {
        // A fully excluded run has no rows, so only the log view sees it.
        prop_assert!(from_rows.is_empty());
    }
    for u in &from_rows {
        for m in Metric::ALL {
            let w = want[&(u.agent_id.clone(), m)];
            prop_assert!(close(u.get(m), w), "seed {seed} {} {m}: got {:?}, oracle {:?}", u.agent_id, u.get(m), w);
        }
    }
    for u in &from_log {
        for m in Metric::ALL {
            if matches!(m, Metric::Vm | Metric::Tc) {
                continue; // themes only live in the table
            }
            let w = want[&(u.agent_id.clone(), m)];
            prop_assert!(
                close(u.get(m), w),
                "seed {seed} log view {} {m}: got {:?}, oracle {:?}",
                u.agent_id,
                u.get(m),
                w
            );
        }
    }
    for row in &rows {
        let r = log.rounds.iter().find(|r| r.round == row.round).unwrap();
        prop_assert_eq!(row.peer_mentioned, Some(mentions(&row.vote_justification, &row.vote_target)));
        let any_winner = r.outcome.winners.iter().any(|w| mentions(&row.vote_justification, w.as_str()));
        prop_assert_eq!(row.winner_mentioned, Some(any_winner));
    }
    Ok(())
}
