//! The binary end to end: exit codes, determinism and output files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nomiclaw_core::agent::{build_agent, AgentBinding, FailingAgent, Phase};
use nomiclaw_core::fixtures::{reference_tournament, theme_corpus};
use nomiclaw_core::ledger::{read_csv, write_csv, write_run_log};
use nomiclaw_core::protocol::{run_game, Condition, GameConfig, Vignette};
use nomiclaw_core::AgentId;
use tempfile::TempDir;

fn nomiclaw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nomiclaw"))
        .args(args)
        .env_remove("NOMIC_BACKEND_URL")
        .env_remove("NOMIC_JOBS")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = nomiclaw(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> (i32, String) {
    let out = nomiclaw(args);
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// Reference tournament logs exported to `dir/hetero.csv`.
fn tournament_csv(dir: &Path) -> PathBuf {
    let logs = dir.join("logs");
    fs::create_dir_all(&logs).unwrap();
    for log in reference_tournament(1) {
        write_run_log(&log, &logs).unwrap();
    }
    let csv = dir.join("hetero.csv");
    ok(&["export", s(&logs), "--out", s(&csv)]);
    csv
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn small_manifest(dir: &Path, runs: u32) -> PathBuf {
    let text = format!(
        r#"condition = "hetero"
vignettes = {:?}
output_dir = "logs"
runs_per_vignette = {runs}
seed = 3
shuffle_seats = true

[[agents]]
model = "a"
policy = "uniform_random"

[[agents]]
model = "b"
policy = "vote_previous_seat"

[[agents]]
model = "c"
policy = "uniform_random"
"#,
        configs().join("vignettes.toml").to_str().unwrap()
    );
    let path = dir.join("m.toml");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn simulate_is_deterministic_and_counts_runs() {
    let tmp = TempDir::new().unwrap();
    let manifest = small_manifest(tmp.path(), 2);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let out = ok(&["simulate", s(&manifest), "--out", s(&a), "--jobs", "3"]);
    assert!(out.contains("8 of 8 runs written"), "{out}");
    assert!(out.contains("hetero_v1_run01: wins ["), "{out}");
    ok(&["simulate", s(&manifest), "--out", s(&b), "--jobs", "1"]);
    assert_eq!(tree(&a).len(), 8);
    assert_eq!(tree(&a), tree(&b));
}

#[test]
fn jobs_can_come_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    let manifest = small_manifest(tmp.path(), 1);
    let out = Command::new(env!("CARGO_BIN_EXE_nomiclaw"))
        .args(["simulate", s(&manifest)])
        .env("NOMIC_JOBS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    // Relative output_dir resolves against the manifest.
    assert_eq!(tree(&tmp.path().join("logs")).len(), 4);
}

#[test]
fn bad_manifests_exit_two() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("missing.toml");
    assert_eq!(code(&["simulate", s(&missing)]).0, 2);
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "condition = \"hetero\"\nvignettes = \"nope.toml\"\noutput_dir = \"x\"\n").unwrap();
    let (c, err) = code(&["simulate", s(&bad)]);
    assert_eq!(c, 2);
    assert!(err.contains("nope.toml"), "{err}");
    let homo_with_agents = tmp.path().join("h.toml");
    let text = fs::read_to_string(small_manifest(tmp.path(), 1)).unwrap().replace("\"hetero\"", "\"homo\"");
    fs::write(&homo_with_agents, text).unwrap();
    assert_eq!(code(&["simulate", s(&homo_with_agents)]).0, 2);
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let tmp = TempDir::new().unwrap();
    let manifest = small_manifest(tmp.path(), 1);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    assert_eq!(code(&["simulate", s(&manifest), "--out", s(&blocker)]).0, 1);
}

#[test]
fn export_names_a_corrupt_log_and_exits_two() {
    let tmp = TempDir::new().unwrap();
    let logs = tmp.path().join("logs");
    fs::create_dir_all(&logs).unwrap();
    for log in reference_tournament(1).into_iter().take(3) {
        write_run_log(&log, &logs).unwrap();
    }
    fs::write(logs.join("nomiclaw_hetero_v2_run09.json"), "{ not json").unwrap();
    let csv = tmp.path().join("out.csv");
    let (c, err) = code(&["export", s(&logs), "--out", s(&csv)]);
    assert_eq!(c, 2);
    assert!(err.contains("nomiclaw_hetero_v2_run09.json"), "{err}");
    assert!(!csv.exists());
    assert_eq!(code(&["export", s(&tmp.path().join("nowhere")), "--out", s(&csv)]).0, 2);
}

fn vignette(id: &str) -> Vignette {
    Vignette { id: id.into(), title: "t".into(), body: "b".into(), legal_domain: "d".into() }
}

#[test]
fn gapped_logs_need_allow_unbalanced() {
    let tmp = TempDir::new().unwrap();
    let logs = tmp.path().join("logs");
    fs::create_dir_all(&logs).unwrap();
    // The second roster loses a round, so its agents end one round short
    // of the first roster's.
    for (idx, fail) in [(1u32, false), (2, true)] {
        let bindings: Vec<AgentBinding> = (1..=3)
            .map(|i| AgentBinding::scripted(format!("Agent_{i}"), format!("m{i}-{idx}"), "vote_next_seat"))
            .collect();
        let seats: Vec<AgentId> = bindings.iter().map(|b| b.agent_id.clone()).collect();
        let mut agents: Vec<_> = bindings.iter().map(|b| build_agent(b, &seats, None).unwrap()).collect();
        if fail {
            let inner = agents.remove(0);
            agents.insert(0, Box::new(FailingAgent::new(inner, Phase::Propose, 4).in_round(2)));
        }
        let config = GameConfig::new(Condition::Heterogeneous, seats.clone(), 1);
        write_run_log(&run_game(config, vignette("v1"), &bindings, &mut agents, idx).unwrap(), &logs).unwrap();
    }
    let csv = tmp.path().join("out.csv");
    let out = nomiclaw(&["export", s(&logs), "--out", s(&csv)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("1 excluded round(s), balanced: no"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("m1-2/Agent_1 (4 rows)"));
    assert!(!csv.exists());
    let out = nomiclaw(&["export", s(&logs), "--out", s(&csv), "--allow-unbalanced"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    assert_eq!(read_csv(&csv).unwrap().len(), 3 * 5 + 3 * 4);
}

#[test]
fn metrics_by_model_has_eleven_columns() {
    let tmp = TempDir::new().unwrap();
    let csv = tournament_csv(tmp.path());
    let out = tmp.path().join("m.csv");
    ok(&["metrics", "--csv", s(&csv), "--by", "model", "--condition", "hetero", "--out", s(&out)]);
    let mut r = csv::Reader::from_path(&out).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header[..2], ["model_id", "units"]);
    assert_eq!(header.len() - 2, 11);
    assert_eq!(r.records().count(), 10);
    let (c, _) = code(&["metrics", "--csv", s(&csv), "--condition", "homo"]);
    assert_eq!(c, 2);
}

#[test]
fn empty_csv_exits_two() {
    let tmp = TempDir::new().unwrap();
    let empty = tmp.path().join("empty.csv");
    write_csv(&[], &empty).unwrap();
    assert_eq!(code(&["metrics", "--csv", s(&empty)]).0, 2);
    fs::write(&empty, "").unwrap();
    assert_eq!(code(&["metrics", "--csv", s(&empty)]).0, 2);
    assert_eq!(code(&["stats", "wins", "--csv", s(&tmp.path().join("missing.csv"))]).0, 2);
}

#[test]
fn stats_commands_write_their_tables() {
    let tmp = TempDir::new().unwrap();
    let csv = tournament_csv(tmp.path());
    let t = tmp.path();
    let out = ok(&["stats", "pairwise", "--csv", s(&csv), "--out", s(&t.join("pw.csv"))]);
    assert!(out.contains("of 45 pairs significant"));
    assert_eq!(csv::Reader::from_path(t.join("pw.csv")).unwrap().records().count(), 45);

    let out = ok(&["stats", "glm", "--csv", s(&csv), "--ref", "deepseek-r1"]);
    assert!(out.contains("model[gemma2]") && out.contains("-1.8167") && out.contains("on 1190 df"), "{out}");
    assert_eq!(code(&["stats", "glm", "--csv", s(&csv), "--ref", "nobody"]).0, 2);

    let out = ok(&["stats", "gee", "--csv", s(&csv), "--ref", "deepseek-r1", "--out", s(&t.join("gee.csv"))]);
    assert!(out.contains("24 clusters"), "{out}");
    assert!(out.contains("vignette[v2]"));
    let out = ok(&["stats", "gee", "--csv", s(&csv), "--no-vignette"]);
    assert!(!out.contains("vignette["));

    ok(&["stats", "pca", "--csv", s(&csv), "--scores", s(&t.join("sc.csv"))]);
    assert_eq!(csv::Reader::from_path(t.join("sc.csv")).unwrap().records().count(), 10);
    let out = ok(&["stats", "cluster", "--csv", s(&csv), "--by-unit", "--k", "3", "--metrics", "svr,wr,ri"]);
    assert!(out.contains("step"));
    assert_eq!(code(&["stats", "pca", "--csv", s(&csv), "--metrics", "nope"]).0, 2);
}

#[test]
fn themes_annotate_is_deterministic_and_trends_need_it() {
    let tmp = TempDir::new().unwrap();
    let t = tmp.path();
    let input = t.join("corpus.csv");
    write_csv(&theme_corpus(300, true, 4), &input).unwrap();
    let (c, err) = code(&["themes", "trends", "--csv", s(&input)]);
    assert_eq!(c, 2);
    assert!(err.contains("themes annotate"), "{err}");

    ok(&["themes", "annotate", "--csv", s(&input), "--out", s(&t.join("a.csv")), "--workers", "4"]);
    ok(&["themes", "annotate", "--csv", s(&input), "--out", s(&t.join("b.csv"))]);
    assert_eq!(fs::read(t.join("a.csv")).unwrap(), fs::read(t.join("b.csv")).unwrap());
    assert_eq!(fs::read(t.join("a.labels.jsonl")).unwrap(), fs::read(t.join("b.labels.jsonl")).unwrap());
    let rows = read_csv(&t.join("a.csv")).unwrap();
    assert!(rows.iter().all(|r| r.rule_theme.is_some() && r.peer_mentioned.is_some()));

    ok(&["themes", "trends", "--csv", s(&t.join("a.csv")), "--out", s(&t.join("tr.csv"))]);
    let mut r = csv::Reader::from_path(t.join("tr.csv")).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["condition", "vignette_id", "stage", "code", "count", "share"]);

    // Without a backend URL a model classifier is a configuration error.
    let (c, _) =
        code(&["themes", "annotate", "--csv", s(&input), "--out", s(&t.join("c.csv")), "--classifier", "llama3"]);
    assert_eq!(c, 2);
}

#[test]
fn sample_and_agreement_round_trip() {
    let tmp = TempDir::new().unwrap();
    let t = tmp.path();
    let input = t.join("corpus.csv");
    write_csv(&theme_corpus(500, true, 8), &input).unwrap();
    ok(&["themes", "annotate", "--csv", s(&input), "--out", s(&t.join("a.csv"))]);
    let out = ok(&["themes", "sample", "--csv", s(&t.join("a.csv")), "--out", s(&t.join("s.csv"))]);
    assert!(out.contains("sampled 150 of 1500"), "{out}");

    // Unfilled human labels are refused.
    let (c, _) =
        code(&["themes", "agreement", "--human", s(&t.join("s.csv")), "--labels", s(&t.join("a.labels.jsonl"))]);
    assert_eq!(c, 2);

    // A coder who copies the classifier agrees perfectly.
    let labels: Vec<serde_json::Value> = fs::read_to_string(t.join("a.labels.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let mut r = csv::Reader::from_path(t.join("s.csv")).unwrap();
    let header = r.headers().unwrap().clone();
    let mut w = csv::Writer::from_path(t.join("h.csv")).unwrap();
    w.write_record(&header).unwrap();
    for rec in r.records() {
        let rec = rec.unwrap();
        let code = labels
            .iter()
            .find(|l| {
                let round = l["round"].as_u64().unwrap().to_string();
                l["run_id"] == rec[0] && round == rec[1] && l["agent_id"] == rec[2] && l["stage"] == rec[3]
            })
            .unwrap()["code"]
            .as_str()
            .unwrap()
            .to_string();
        let mut fields: Vec<String> = rec.iter().map(String::from).collect();
        *fields.last_mut().unwrap() = code;
        w.write_record(&fields).unwrap();
    }
    w.flush().unwrap();
    let out = ok(&[
        "themes",
        "agreement",
        "--human",
        s(&t.join("h.csv")),
        "--labels",
        s(&t.join("a.labels.jsonl")),
        "--out",
        s(&t.join("k.csv")),
    ]);
    assert!(out.contains("1.0000"), "{out}");
}

#[test]
fn report_writes_every_table_and_is_byte_stable() {
    let tmp = TempDir::new().unwrap();
    let t = tmp.path();
    let csv = tournament_csv(t);
    let out = ok(&["report", "--csv", s(&csv), "--out", s(&t.join("r1")), "--ref", "deepseek-r1"]);
    assert!(out.contains("metrics_by_model.csv"));
    let files: Vec<String> = tree(&t.join("r1")).into_iter().map(|(n, _)| n).collect();
    for name in ["metrics_by_model.csv", "glm_table.csv", "pca_scores.csv", "win_table.csv", "summary.json"] {
        assert!(files.contains(&name.to_string()), "{name} missing from {files:?}");
    }
    // No theme columns yet: those tables are skipped with a notice.
    assert!(!files.contains(&"theme_trends.csv".to_string()));
    let (_, err) = code(&["report", "--csv", s(&csv), "--out", s(&t.join("r2")), "--ref", "deepseek-r1"]);
    assert!(err.contains("skipped theme_trends.csv"), "{err}");
    assert_eq!(tree(&t.join("r1")), tree(&t.join("r2")));

    ok(&["themes", "annotate", "--csv", s(&csv), "--out", s(&t.join("a.csv"))]);
    ok(&["report", "--csv", s(&t.join("a.csv")), "--out", s(&t.join("r3"))]);
    let files: Vec<String> = tree(&t.join("r3")).into_iter().map(|(n, _)| n).collect();
    assert!(files.contains(&"theme_trends.csv".to_string()));
    assert!(files.contains(&"theme_persistence.csv".to_string()));
}
