//! `nomiclaw metrics` and `nomiclaw stats`.

use std::path::PathBuf;

use nomiclaw_core::analysis::{
    gee_by_run, glm_by_model, pairwise_wins, profile_matrix, win_table, wins_uniformity, GeeCovariates, ProfileMatrix,
    DEFAULT_PROFILE_METRICS,
};
use nomiclaw_core::ledger::InteractionRow;
use nomiclaw_core::metrics::{summarize, Grouping, Metric, MetricOptions};
use nomiclaw_stats::{pca, ward_cluster, GeeOptions};

use crate::builders;
use crate::error::{input, CliResult};
use crate::inputs::unit_metrics;

pub struct MetricsArgs {
    pub grouping: Grouping,
    pub num_rounds: u32,
    pub opts: MetricOptions,
    pub all_metrics: bool,
    pub out: Option<PathBuf>,
    pub long: Option<PathBuf>,
}

pub fn metrics(rows: &[InteractionRow], args: MetricsArgs) -> CliResult<()> {
    let units = unit_metrics(rows, args.num_rounds, args.opts);
    let reports = summarize(&units, args.grouping);
    let metrics: Vec<Metric> = if args.all_metrics { Metric::ALL.to_vec() } else { Metric::INTERACTION.to_vec() };
    builders::metric_display(&reports, args.grouping, &metrics).print();
    if let Some(path) = &args.out {
        builders::metric_means(&reports, args.grouping, &metrics).write_csv(path)?;
        println!("wrote {}", path.display());
    }
    if let Some(path) = &args.long {
        builders::metric_long(&reports, args.grouping, &Metric::ALL).write_csv(path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn wins(rows: &[InteractionRow], out: Option<PathBuf>) -> CliResult<()> {
    let table = win_table(rows);
    let t = builders::wins(&table);
    t.print();
    let chi = wins_uniformity(&table)?;
    println!("{}", builders::chi_square_line(&table, &chi));
    if let Some(path) = out {
        t.write_csv(&path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn pairwise(rows: &[InteractionRow], alpha: f64, out: Option<PathBuf>) -> CliResult<()> {
    let pairs = pairwise_wins(&win_table(rows))?;
    let t = builders::pairwise(&pairs, alpha);
    t.print();
    let sig = pairs.iter().filter(|p| p.result.adjusted_p.unwrap_or(1.0) < alpha).count();
    println!("{sig} of {} pairs significant after Benjamini-Hochberg at alpha {alpha}", pairs.len());
    if let Some(path) = out {
        t.write_csv(&path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn glm(rows: &[InteractionRow], reference: Option<&str>, out: Option<PathBuf>) -> CliResult<()> {
    let fit = glm_by_model(rows, reference)?;
    let t = builders::glm(&fit);
    t.print();
    println!("{}", builders::glm_footer(&fit));
    if let Some(path) = out {
        t.write_csv(&path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn gee(
    rows: &[InteractionRow],
    covariates: GeeCovariates,
    reference: Option<&str>,
    out: Option<PathBuf>,
) -> CliResult<()> {
    let res = gee_by_run(rows, covariates, reference, GeeOptions::default())?;
    let t = builders::gee(&res);
    t.print();
    println!("{}", builders::gee_footer(&res));
    if let Some(path) = out {
        t.write_csv(&path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub struct ProfileArgs {
    pub metrics: Option<Vec<Metric>>,
    pub by_unit: bool,
    pub num_rounds: u32,
    pub opts: MetricOptions,
}

pub fn profile(rows: &[InteractionRow], args: &ProfileArgs) -> CliResult<ProfileMatrix> {
    let units = unit_metrics(rows, args.num_rounds, args.opts);
    let metrics = args.metrics.clone().unwrap_or_else(|| DEFAULT_PROFILE_METRICS.to_vec());
    let m = profile_matrix(&units, &metrics, !args.by_unit);
    if m.skipped > 0 {
        eprintln!("note: {} unit(s) left out for undefined metrics", m.skipped);
    }
    if m.labels.len() < 2 {
        return Err(input(format!("need at least two complete units, found {}", m.labels.len())));
    }
    Ok(m)
}

pub fn pca_cmd(
    rows: &[InteractionRow],
    args: &ProfileArgs,
    scores_out: Option<PathBuf>,
    loadings_out: Option<PathBuf>,
) -> CliResult<()> {
    let m = profile(rows, args)?;
    let p = pca(&m.data, &m.columns)?;
    if !p.dropped.is_empty() {
        eprintln!("note: constant columns dropped: {}", p.dropped.join(", "));
    }
    builders::pca_variance(&p).print();
    println!();
    builders::pca_loadings(&p).print();
    if let Some(path) = scores_out {
        builders::pca_scores(&p, &m).write_csv(&path)?;
        println!("wrote {}", path.display());
    }
    if let Some(path) = loadings_out {
        builders::pca_loadings(&p).write_csv(&path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn cluster_cmd(rows: &[InteractionRow], args: &ProfileArgs, k: usize, out: Option<PathBuf>) -> CliResult<()> {
    let m = profile(rows, args)?;
    let (z, _, _, _) = nomiclaw_stats::pca::standardize(&m.data);
    let tree = ward_cluster(&z)?;
    let assignment = tree.cut(k.min(m.labels.len()))?;
    let (a, merges) = builders::clusters(&tree, &m.labels, &assignment);
    a.print();
    println!();
    merges.print();
    if let Some(path) = out {
        a.write_csv(&path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
