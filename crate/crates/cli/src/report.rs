//! `nomiclaw report`: every figure-ready table in one directory.

use std::fs;
use std::path::{Path, PathBuf};

use nomiclaw_core::analysis::{gee_by_run, glm_by_model, pairwise_wins, win_table, wins_uniformity, GeeCovariates};
use nomiclaw_core::ledger::InteractionRow;
use nomiclaw_core::metrics::{summarize, Grouping, Metric, MetricOptions};
use nomiclaw_core::themes::{persistence_table, theme_frequencies};
use nomiclaw_stats::{pca, ward_cluster, GeeOptions, PersistenceMode};
use serde_json::json;

use crate::analyze::{profile, ProfileArgs};
use crate::builders;
use crate::error::{runtime, CliResult};
use crate::inputs::unit_metrics;
use crate::table::Table;

pub struct ReportArgs {
    pub out: PathBuf,
    pub reference: Option<String>,
    pub num_rounds: u32,
    pub k: usize,
    pub alpha: f64,
    pub mode: PersistenceMode,
}

struct Writer<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl Writer<'_> {
    fn table(&mut self, name: &str, t: &Table) -> CliResult<()> {
        t.write_csv(&self.dir.join(name))?;
        self.written.push(name.to_string());
        Ok(())
    }
}

/// Writes the report. Sections that cannot be computed on this table (too
/// few units, no theme columns) are skipped with a notice; the other files
/// are still written.
pub fn run(rows: &[InteractionRow], args: &ReportArgs) -> CliResult<()> {
    fs::create_dir_all(&args.out).map_err(|e| runtime(format!("{}: {e}", args.out.display())))?;
    let mut w = Writer { dir: &args.out, written: Vec::new() };
    let mut skipped: Vec<String> = Vec::new();
    let opts = MetricOptions::default();

    let units = unit_metrics(rows, args.num_rounds, opts);
    let reports = summarize(&units, Grouping::ModelCondition);
    w.table("metrics_by_model.csv", &builders::metric_means(&reports, Grouping::ModelCondition, &Metric::INTERACTION))?;
    w.table("metrics_long.csv", &builders::metric_long(&reports, Grouping::ModelCondition, &Metric::ALL))?;

    let wins = win_table(rows);
    w.table("win_table.csv", &builders::wins(&wins))?;
    let mut summary = serde_json::Map::new();
    summary.insert("rows".into(), json!(rows.len()));
    summary.insert("undecided_rounds".into(), json!(wins.undecided_rounds));
    summary.insert("total_rounds".into(), json!(wins.total_rounds));
    match wins_uniformity(&wins) {
        Ok(chi) => {
            summary.insert(
                "wins_chi_square".into(),
                json!({ "statistic": chi.statistic, "df": chi.df, "p_value": chi.p_value }),
            );
        }
        Err(e) => skipped.push(format!("chi-square: {e}")),
    }
    match pairwise_wins(&wins) {
        Ok(pairs) => w.table("pairwise.csv", &builders::pairwise(&pairs, args.alpha))?,
        Err(e) => skipped.push(format!("pairwise.csv: {e}")),
    }
    match glm_by_model(rows, args.reference.as_deref()) {
        Ok(fit) => {
            w.table("glm_table.csv", &builders::glm(&fit))?;
            summary.insert(
                "glm".into(),
                json!({ "deviance": fit.deviance, "residual_df": fit.residual_df, "converged": fit.converged }),
            );
        }
        Err(e) => skipped.push(format!("glm_table.csv: {e}")),
    }
    match gee_by_run(rows, GeeCovariates::default(), args.reference.as_deref(), GeeOptions::default()) {
        Ok(res) => {
            w.table("gee_table.csv", &builders::gee(&res))?;
            summary.insert("gee".into(), json!({ "alpha": res.alpha, "clusters": res.n_clusters }));
        }
        Err(e) => skipped.push(format!("gee_table.csv: {e}")),
    }

    let pargs = ProfileArgs { metrics: None, by_unit: false, num_rounds: args.num_rounds, opts };
    match profile(rows, &pargs) {
        Ok(m) => {
            match pca(&m.data, &m.columns) {
                Ok(p) => {
                    w.table("pca_scores.csv", &builders::pca_scores(&p, &m))?;
                    w.table("pca_loadings.csv", &builders::pca_loadings(&p))?;
                    w.table("pca_variance.csv", &builders::pca_variance(&p))?;
                }
                Err(e) => skipped.push(format!("pca: {e}")),
            }
            let (z, _, _, _) = nomiclaw_stats::pca::standardize(&m.data);
            match ward_cluster(&z).and_then(|tree| tree.cut(args.k.min(m.labels.len())).map(|a| (tree, a))) {
                Ok((tree, assignment)) => {
                    let (a, merges) = builders::clusters(&tree, &m.labels, &assignment);
                    w.table("clusters.csv", &a)?;
                    w.table("cluster_merges.csv", &merges)?;
                }
                Err(e) => skipped.push(format!("clusters: {e}")),
            }
        }
        Err(e) => skipped.push(format!("pca and clusters: {e}")),
    }

    if rows.iter().any(|r| r.rule_theme.is_some() || r.reasoning_theme.is_some() || r.vote_theme.is_some()) {
        w.table("theme_trends.csv", &builders::frequencies(&theme_frequencies(rows)))?;
        w.table("theme_persistence.csv", &builders::persistence(&persistence_table(rows, args.mode)))?;
    } else {
        skipped.push("theme_trends.csv and theme_persistence.csv: no theme columns (run `themes annotate`)".into());
    }

    summary.insert("skipped".into(), json!(skipped));
    let path = args.out.join("summary.json");
    let body = serde_json::to_string_pretty(&serde_json::Value::Object(summary)).map_err(runtime)?;
    fs::write(&path, body + "\n").map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    w.written.push("summary.json".into());

    for note in &skipped {
        eprintln!("skipped {note}");
    }
    println!("wrote {} file(s) to {}", w.written.len(), args.out.display());
    for name in &w.written {
        println!("  {name}");
    }
    Ok(())
}
