//! `nomiclaw simulate`: plays every run of a manifest on a bounded worker
//! pool and writes one JSON log per run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use nomiclaw_core::agent::{build_agent, AgentBinding, AgentKind, BackendClient, RateLimiter, TemplateSet};
use nomiclaw_core::ids::stable_hash;
use nomiclaw_core::ledger::write_run_log;
use nomiclaw_core::protocol::{run_game, GameConfig, OutcomeKind, RunLog, Vignette};
use nomiclaw_core::AgentId;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{input, runtime, CliError, CliResult};
use crate::manifest::Manifest;

pub struct SimulateArgs {
    pub manifest: PathBuf,
    pub jobs: Option<usize>,
    pub backend_url: Option<String>,
    pub output_dir: Option<PathBuf>,
}

struct RunPlan {
    vignette: Vignette,
    run_index: u32,
    bindings: Vec<AgentBinding>,
    config: GameConfig,
}

/// Lays out every run. Heterogeneous runs are numbered 1..=runs per
/// vignette; homogeneous runs continue the numbering across model groups so
/// every log of a vignette gets its own index.
fn plan_runs(m: &Manifest, vignettes: &[Vignette], backend_params: Option<&serde_json::Value>) -> Vec<RunPlan> {
    let rosters = m.rosters();
    let mut plans = Vec::new();
    for v in vignettes {
        let mut index = 0;
        for roster in &rosters {
            for _ in 0..m.runs_per_vignette {
                index += 1;
                let run_seed = m.seed ^ stable_hash(&[&v.id, &index.to_string(), m.condition.short()]);
                let bindings: Vec<AgentBinding> = roster
                    .iter()
                    .map(|b| {
                        let mut b = b.clone();
                        if let Some(p) = b.policy_params.get_mut("policy") {
                            // A bare `uniform_random` gets a seed derived from the run.
                            if p == "uniform_random" {
                                *p = format!("uniform_random:{run_seed}");
                            }
                        }
                        b
                    })
                    .collect();
                let mut seats: Vec<AgentId> = bindings.iter().map(|b| b.agent_id.clone()).collect();
                if m.shuffle_seats {
                    seats.shuffle(&mut ChaCha8Rng::seed_from_u64(run_seed));
                }
                let mut config = GameConfig::new(m.condition, seats, run_seed);
                config.num_rounds = m.game.num_rounds;
                config.points_win = m.game.points_win;
                config.points_tie = m.game.points_tie;
                if bindings.iter().any(|b| b.kind == AgentKind::Backend) {
                    if let Some(serde_json::Value::Object(map)) = backend_params {
                        config.backend_params = map.clone().into_iter().collect();
                    }
                }
                plans.push(RunPlan { vignette: v.clone(), run_index: index, bindings, config });
            }
        }
    }
    plans
}

fn summary_line(log: &RunLog, path: &Path) -> String {
    let mut wins: BTreeMap<&str, u32> = BTreeMap::new();
    let (mut ties, mut excluded) = (0, 0);
    for r in &log.rounds {
        match r.outcome.kind {
            OutcomeKind::Winner => *wins.entry(r.outcome.winners[0].as_str()).or_default() += 1,
            OutcomeKind::Tie => ties += 1,
            OutcomeKind::Undecided => excluded += 1,
        }
    }
    let wins: Vec<String> = wins.iter().map(|(a, n)| format!("{a}={n}")).collect();
    format!("{}: wins [{}], ties {ties}, excluded {excluded} -> {}", log.run_id, wins.join(", "), path.display())
}

pub fn run(args: SimulateArgs) -> CliResult<()> {
    let mut manifest = Manifest::load(&args.manifest)?;
    if let Some(dir) = args.output_dir {
        manifest.output_dir = dir;
    }
    let vignettes = manifest.load_vignettes()?;
    let needs_backend = manifest.rosters().iter().flatten().any(|b| b.kind == AgentKind::Backend);

    let backend = if needs_backend {
        let settings = manifest.backend.clone().unwrap_or_default();
        let url =
            args.backend_url.clone().or(settings.url.clone()).ok_or_else(|| {
                input("backend agents need a URL: set NOMIC_BACKEND_URL, --backend-url or [backend].url")
            })?;
        let mut client = BackendClient::new(url, settings.params.clone()).map_err(input)?;
        if let Some(rate) = settings.rate_limit {
            if rate <= 0.0 {
                return Err(input("[backend].rate_limit must be positive"));
            }
            client = client.with_rate_limiter(Arc::new(RateLimiter::new(rate)));
        }
        let templates = match &settings.templates {
            Some(dir) => TemplateSet::from_dir(dir).map_err(input)?,
            None => TemplateSet::default(),
        };
        let params = serde_json::to_value(&settings.params).map_err(runtime)?;
        Some((Arc::new(client), Arc::new(templates), params))
    } else {
        None
    };

    let plans = plan_runs(&manifest, &vignettes, backend.as_ref().map(|b| &b.2));
    // Configuration problems are caught before any game is played.
    for p in &plans {
        p.config.validate().map_err(input)?;
        for b in &p.bindings {
            build_agent(b, &p.config.seat_order, backend.as_ref().map(|(c, t, _)| (c, t))).map_err(input)?;
        }
    }
    std::fs::create_dir_all(&manifest.output_dir)
        .map_err(|e| runtime(format!("{}: {e}", manifest.output_dir.display())))?;

    let jobs = args.jobs.or(manifest.jobs).unwrap_or(1).clamp(1, plans.len().max(1));
    log::info!("playing {} runs on {jobs} worker(s)", plans.len());
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, Result<String, String>)>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(plan) = plans.get(i) else { break };
                let outcome = play(plan, backend.as_ref().map(|(c, t, _)| (c, t)), &manifest.output_dir);
                if let Err(e) = &outcome {
                    log::error!("run {} of {}: {e}", plan.run_index, plan.vignette.id);
                }
                results.lock().unwrap_or_else(|e| e.into_inner()).push((i, outcome));
            });
        }
    });
    let mut results = results.into_inner().unwrap_or_else(|e| e.into_inner());
    results.sort_by_key(|(i, _)| *i);
    let mut failed = 0;
    for (i, r) in &results {
        match r {
            Ok(line) => println!("{line}"),
            Err(e) => {
                failed += 1;
                println!("{} run{:02}: FAILED: {e}", plans[*i].vignette.id, plans[*i].run_index);
            }
        }
    }
    println!("{} of {} runs written to {}", results.len() - failed, plans.len(), manifest.output_dir.display());
    if failed > 0 {
        return Err(CliError::Runtime(format!("{failed} run(s) failed")));
    }
    Ok(())
}

fn play(
    plan: &RunPlan,
    backend: Option<(&Arc<BackendClient>, &Arc<TemplateSet>)>,
    out: &Path,
) -> Result<String, String> {
    let mut agents = plan
        .bindings
        .iter()
        .map(|b| build_agent(b, &plan.config.seat_order, backend))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let log = run_game(plan.config.clone(), plan.vignette.clone(), &plan.bindings, &mut agents, plan.run_index)
        .map_err(|e| e.to_string())?;
    let path = write_run_log(&log, out).map_err(|e| e.to_string())?;
    Ok(summary_line(&log, &path))
}
