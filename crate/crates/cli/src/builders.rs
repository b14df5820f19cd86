//! Result tables shared by the individual commands and `report`.

use nomiclaw_core::analysis::{ProfileMatrix, WinTable};
use nomiclaw_core::metrics::{Grouping, Metric, MetricReport};
use nomiclaw_core::themes::{AgreementRow, FrequencyRow, PersistenceRow};
use nomiclaw_stats::{ClusterTree, FitResult, GeeResult, PairwiseComparison, PcaResult, TestResult};

use crate::table::{num, pval, raw, Table};

fn group_cells(r: &MetricReport, grouping: Grouping) -> Vec<String> {
    let model = r.model_id.clone().unwrap_or_default();
    let cond = r.condition.map(|c| c.to_string()).unwrap_or_default();
    match grouping {
        Grouping::ModelCondition => vec![model, cond],
        Grouping::Model => vec![model],
        Grouping::Condition => vec![cond],
        Grouping::All => vec!["all".into()],
    }
}

fn group_header(grouping: Grouping) -> Vec<String> {
    match grouping {
        Grouping::ModelCondition => vec!["model_id".into(), "condition".into()],
        Grouping::Model => vec!["model_id".into()],
        Grouping::Condition => vec!["condition".into()],
        Grouping::All => vec!["group".into()],
    }
}

/// One row per group: unit count, then the mean of each metric.
pub fn metric_means(reports: &[MetricReport], grouping: Grouping, metrics: &[Metric]) -> Table {
    let mut header = group_header(grouping);
    header.push("units".into());
    header.extend(metrics.iter().map(|m| m.to_string()));
    let mut t = Table::new(header);
    for r in reports {
        let mut row = group_cells(r, grouping);
        row.push(r.units.to_string());
        row.extend(metrics.iter().map(|m| raw(r.stats[m].mean)));
        t.push(row);
    }
    t
}

/// Long form: one row per (group, metric) with mean, SD, n and missing.
pub fn metric_long(reports: &[MetricReport], grouping: Grouping, metrics: &[Metric]) -> Table {
    let mut header = group_header(grouping);
    header.extend(["metric", "mean", "sd", "n", "missing"].map(String::from));
    let mut t = Table::new(header);
    for r in reports {
        for m in metrics {
            let s = r.stats[m];
            let mut row = group_cells(r, grouping);
            row.extend([m.to_string(), raw(s.mean), raw(s.sd), s.n.to_string(), s.missing.to_string()]);
            t.push(row);
        }
    }
    t
}

/// Terminal view: `mean ± sd` per metric.
pub fn metric_display(reports: &[MetricReport], grouping: Grouping, metrics: &[Metric]) -> Table {
    let mut header = group_header(grouping);
    header.push("units".into());
    header.extend(metrics.iter().map(|m| m.to_string()));
    let mut t = Table::new(header);
    for r in reports {
        let mut row = group_cells(r, grouping);
        row.push(r.units.to_string());
        row.extend(metrics.iter().map(|m| {
            let s = r.stats[m];
            match (s.mean, s.sd) {
                (Some(mean), Some(sd)) => format!("{mean:.2}±{sd:.2}"),
                _ => "NA".into(),
            }
        }));
        t.push(row);
    }
    t
}

pub fn wins(table: &WinTable) -> Table {
    let mut t = Table::new(["model_id", "wins", "rounds", "win_rate"]);
    for m in &table.models {
        t.push([m.model_id.clone(), m.wins.to_string(), m.rounds.to_string(), format!("{:.3}", m.win_rate)]);
    }
    t
}

pub fn chi_square_line(table: &WinTable, test: &TestResult) -> String {
    format!(
        "undecided rounds: {}/{}\nchi-square vs equal shares: chi2({}) = {:.2}, p = {}",
        table.undecided_rounds,
        table.total_rounds,
        table.models.len().saturating_sub(1),
        test.statistic,
        pval(test.p_value)
    )
}

pub fn pairwise(pairs: &[PairwiseComparison], alpha: f64) -> Table {
    let mut t = Table::new(["first", "second", "z", "p", "p_bh", "significant"]);
    for p in pairs {
        let adj = p.result.adjusted_p.unwrap_or(p.result.p_value);
        t.push([
            p.first.clone(),
            p.second.clone(),
            format!("{:.4}", p.result.statistic),
            pval(p.result.p_value),
            pval(adj),
            if adj < alpha { "yes".into() } else { "no".into() },
        ]);
    }
    t
}

pub fn glm(fit: &FitResult) -> Table {
    let mut t = Table::new(["term", "estimate", "std_error", "z", "p", "odds_ratio", "ci_low", "ci_high"]);
    for c in &fit.coefficients {
        t.push([
            c.name.clone(),
            format!("{:.4}", c.estimate),
            format!("{:.4}", c.std_error),
            format!("{:.3}", c.z),
            pval(c.p_value),
            format!("{:.4}", c.odds_ratio),
            format!("{:.4}", c.ci_low),
            format!("{:.4}", c.ci_high),
        ]);
    }
    t
}

pub fn glm_footer(fit: &FitResult) -> String {
    format!(
        "deviance {:.4} on {} df (ratio {:.4}); null deviance {:.4}; {} after {} iterations",
        fit.deviance,
        fit.residual_df,
        fit.dispersion_ratio,
        fit.null_deviance,
        if fit.converged { "converged" } else { "NOT converged" },
        fit.iterations
    )
}

pub fn gee(res: &GeeResult) -> Table {
    let mut t = Table::new(["term", "estimate", "robust_se", "naive_se", "z", "p"]);
    for c in &res.coefficients {
        t.push([
            c.name.clone(),
            format!("{:.4}", c.estimate),
            format!("{:.4}", c.robust_se),
            format!("{:.4}", c.naive_se),
            format!("{:.3}", c.z),
            pval(c.wald_p),
        ]);
    }
    t
}

pub fn gee_footer(res: &GeeResult) -> String {
    format!(
        "exchangeable alpha {:.4}, scale {:.4}, {} clusters; {} after {} iterations",
        res.alpha,
        res.scale,
        res.n_clusters,
        if res.converged { "converged" } else { "NOT converged" },
        res.iterations
    )
}

pub fn pca_variance(p: &PcaResult) -> Table {
    let mut t = Table::new(["component", "eigenvalue", "variance_explained", "cumulative"]);
    let mut cum = 0.0;
    for (i, (e, v)) in p.eigenvalues.iter().zip(&p.variance_explained).enumerate() {
        cum += v;
        t.push([format!("PC{}", i + 1), format!("{e:.4}"), format!("{v:.4}"), format!("{cum:.4}")]);
    }
    t
}

pub fn pca_loadings(p: &PcaResult) -> Table {
    let k = p.loadings.ncols();
    let mut header = vec!["metric".to_string()];
    header.extend((1..=k).map(|i| format!("PC{i}")));
    let mut t = Table::new(header);
    for (i, name) in p.columns.iter().enumerate() {
        let mut row = vec![name.clone()];
        row.extend((0..k).map(|j| format!("{:.6}", p.loadings[(i, j)])));
        t.push(row);
    }
    t
}

pub fn pca_scores(p: &PcaResult, m: &ProfileMatrix) -> Table {
    let k = p.scores.ncols();
    let mut header = vec!["unit".to_string()];
    header.extend((1..=k).map(|i| format!("PC{i}")));
    let mut t = Table::new(header);
    for (i, label) in m.labels.iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend((0..k).map(|j| format!("{:.6}", p.scores[(i, j)])));
        t.push(row);
    }
    t
}

pub fn clusters(tree: &ClusterTree, labels: &[String], assignment: &[usize]) -> (Table, Table) {
    let mut a = Table::new(["unit", "cluster"]);
    for (l, c) in labels.iter().zip(assignment) {
        a.push([l.clone(), (c + 1).to_string()]);
    }
    let mut m = Table::new(["step", "left", "right", "height", "size"]);
    for (i, merge) in tree.merges.iter().enumerate() {
        m.push([
            (i + 1).to_string(),
            merge.left.to_string(),
            merge.right.to_string(),
            format!("{:.6}", merge.height),
            merge.size.to_string(),
        ]);
    }
    (a, m)
}

pub fn frequencies(rows: &[FrequencyRow]) -> Table {
    let mut t = Table::new(["condition", "vignette_id", "stage", "code", "count", "share"]);
    for r in rows {
        t.push([
            r.condition.clone(),
            r.vignette_id.clone(),
            r.stage.to_string(),
            r.code.to_string(),
            r.count.to_string(),
            format!("{:.4}", r.share),
        ]);
    }
    t
}

pub fn persistence(rows: &[PersistenceRow]) -> Table {
    let mut t = Table::new(["condition", "code", "n", "rule_share", "reasoning_share", "odds_ratio"]);
    for r in rows {
        t.push([
            r.condition.clone(),
            r.code.to_string(),
            r.n.to_string(),
            format!("{:.4}", r.rule_share),
            format!("{:.4}", r.reasoning_share),
            r.odds_ratio.to_string(),
        ]);
    }
    t
}

pub fn agreement(rows: &[AgreementRow]) -> Table {
    let mut t = Table::new(["stage", "classifier", "n", "observed", "expected", "kappa", "below_0.7"]);
    for r in rows {
        let k = r.kappa.as_ref();
        t.push([
            r.stage.to_string(),
            r.classifier.clone(),
            r.n.to_string(),
            num(k.map(|k| k.observed_agreement), 4),
            num(k.map(|k| k.expected_agreement), 4),
            k.map_or("undefined".into(), |k| format!("{:.4}", k.kappa)),
            if r.below_bar { "yes".into() } else { "no".into() },
        ]);
    }
    t
}
