//! Bridges the analysis table to the statistics crate: win tables, the
//! logistic models on agent-round outcomes, and unit-by-metric matrices for
//! PCA and clustering.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use nomiclaw_stats::{
    chi_square_gof, gee_logit_exchangeable, glm_logit, pairwise_two_prop, DesignBuilder, FitResult, GeeOptions,
    GeeResult, PairwiseComparison, StatsError, TestResult,
};
use serde::Serialize;

use crate::ledger::InteractionRow;
use crate::metrics::{Metric, UnitMetrics};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelWins {
    pub model_id: String,
    pub wins: u64,
    /// Agent-rounds observed for the model.
    pub rounds: u64,
    pub win_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WinTable {
    /// Sorted by wins descending, then model id.
    pub models: Vec<ModelWins>,
    /// Counted (run, round) slots without an outright winner.
    pub undecided_rounds: u64,
    pub total_rounds: u64,
}

pub fn win_table(rows: &[InteractionRow]) -> WinTable {
    let mut per_model: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    let mut rounds: BTreeMap<(&str, u32), bool> = BTreeMap::new();
    for row in rows {
        let e = per_model.entry(&row.model_id).or_default();
        e.0 += u64::from(row.won);
        e.1 += 1;
        *rounds.entry((&row.run_id, row.round)).or_default() |= row.won;
    }
    let mut models: Vec<ModelWins> = per_model
        .into_iter()
        .map(|(m, (wins, n))| ModelWins { model_id: m.to_string(), wins, rounds: n, win_rate: wins as f64 / n as f64 })
        .collect();
    models.sort_by(|a, b| b.wins.cmp(&a.wins).then_with(|| a.model_id.cmp(&b.model_id)));
    WinTable {
        models,
        undecided_rounds: rounds.values().filter(|w| !**w).count() as u64,
        total_rounds: rounds.len() as u64,
    }
}

/// Pearson test of the model win counts against equal shares.
pub fn wins_uniformity(table: &WinTable) -> Result<TestResult, StatsError> {
    let observed: Vec<f64> = table.models.iter().map(|m| m.wins as f64).collect();
    let k = observed.len().max(1) as f64;
    chi_square_gof(&observed, &vec![1.0 / k; observed.len()])
}

/// All pairwise two-proportion tests on win rates with BH adjustment.
pub fn pairwise_wins(table: &WinTable) -> Result<Vec<PairwiseComparison>, StatsError> {
    let groups: Vec<(String, u64, u64)> = table.models.iter().map(|m| (m.model_id.clone(), m.wins, m.rounds)).collect();
    pairwise_two_prop(&groups)
}

fn won(rows: &[InteractionRow]) -> Vec<f64> {
    rows.iter().map(|r| if r.won { 1.0 } else { 0.0 }).collect()
}

/// Logit of an outright win on the model factor, one observation per
/// agent-round. `reference` picks the baseline model (case-insensitive).
pub fn glm_by_model(rows: &[InteractionRow], reference: Option<&str>) -> Result<FitResult, StatsError> {
    let models: Vec<&str> = rows.iter().map(|r| r.model_id.as_str()).collect();
    let design = DesignBuilder::new(rows.len()).intercept().factor("model", &models, reference)?.build();
    glm_logit(&design, &won(rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeeCovariates {
    pub model: bool,
    pub vignette: bool,
}

impl Default for GeeCovariates {
    fn default() -> Self {
        Self { model: true, vignette: true }
    }
}

/// Exchangeable-correlation GEE of outright wins, clustered on run.
pub fn gee_by_run(
    rows: &[InteractionRow],
    covariates: GeeCovariates,
    model_reference: Option<&str>,
    opts: GeeOptions,
) -> Result<GeeResult, StatsError> {
    let mut b = DesignBuilder::new(rows.len()).intercept();
    if covariates.model {
        let models: Vec<&str> = rows.iter().map(|r| r.model_id.as_str()).collect();
        b = b.factor("model", &models, model_reference)?;
    }
    if covariates.vignette {
        let vignettes: Vec<&str> = rows.iter().map(|r| r.vignette_id.as_str()).collect();
        b = b.factor("vignette", &vignettes, None)?;
    }
    let clusters: Vec<&str> = rows.iter().map(|r| r.run_id.as_str()).collect();
    gee_logit_exchangeable(&b.build(), &won(rows), &clusters, opts)
}

/// Metrics used for PCA and clustering unless told otherwise. VP is left
/// out because it is 1 - VV, and FMW because it is defined for one agent
/// per run only.
pub const DEFAULT_PROFILE_METRICS: [Metric; 9] =
    [Metric::Svr, Metric::Avr, Metric::Wr, Metric::Vv, Metric::Ri, Metric::Csr, Metric::Bs, Metric::Ed, Metric::Cc];

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileMatrix {
    pub labels: Vec<String>,
    pub columns: Vec<String>,
    pub data: DMatrix<f64>,
    /// Units left out because a metric was undefined.
    pub skipped: usize,
}

/// Unit-by-metric matrix. With `by_model`, each row is a (model, condition)
/// mean over its units; otherwise each complete (run, agent) unit is a row.
pub fn profile_matrix(units: &[UnitMetrics], metrics: &[Metric], by_model: bool) -> ProfileMatrix {
    let columns: Vec<String> = metrics.iter().map(|m| m.to_string()).collect();
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut skipped = 0;
    if by_model {
        let mut groups: BTreeMap<String, Vec<&UnitMetrics>> = BTreeMap::new();
        for u in units {
            let cond = u.condition.map_or_else(|| "unknown".to_string(), |c| c.to_string());
            groups.entry(format!("{}|{cond}", u.model_id)).or_default().push(u);
        }
        for (label, members) in groups {
            let means: Vec<Option<f64>> = metrics
                .iter()
                .map(|m| {
                    let v: Vec<f64> = members.iter().filter_map(|u| u.get(*m)).collect();
                    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
                })
                .collect();
            match means.into_iter().collect::<Option<Vec<f64>>>() {
                Some(v) => {
                    labels.push(label);
                    rows.push(v);
                }
                None => skipped += 1,
            }
        }
    } else {
        for u in units {
            match metrics.iter().map(|m| u.get(*m)).collect::<Option<Vec<f64>>>() {
                Some(v) => {
                    labels.push(format!("{}|{}", u.run_id, u.agent_id));
                    rows.push(v);
                }
                None => skipped += 1,
            }
        }
    }
    let data = DMatrix::from_fn(rows.len(), metrics.len(), |i, j| rows[i][j]);
    ProfileMatrix { labels, columns, data, skipped }
}

/// Model ids in the table, sorted.
pub fn models(rows: &[InteractionRow]) -> BTreeSet<String> {
    rows.iter().map(|r| r.model_id.clone()).collect()
}
