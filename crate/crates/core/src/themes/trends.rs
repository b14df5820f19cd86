use std::collections::BTreeMap;

use nomiclaw_stats::{persistence_odds_ratio, OddsRatio, PersistenceMode};
use serde::Serialize;

use crate::ledger::InteractionRow;
use crate::themes::classify::Stage;
use crate::themes::ThemeCode;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyRow {
    pub condition: String,
    pub vignette_id: String,
    pub stage: Stage,
    pub code: ThemeCode,
    pub count: usize,
    /// Share among known codes of this (condition, vignette, stage).
    pub share: f64,
}

fn theme_of(row: &InteractionRow, stage: Stage) -> Option<ThemeCode> {
    match stage {
        Stage::Rule => row.rule_theme,
        Stage::Reasoning => row.reasoning_theme,
        Stage::Vote => row.vote_theme,
    }
}

fn condition_label(row: &InteractionRow) -> String {
    row.condition().map_or_else(|| "unknown".to_string(), |c| c.to_string())
}

/// Theme frequency per (condition, vignette, stage). `UNKNOWN` and missing
/// labels are left out, so each group's shares sum to 1. All ten codes are
/// listed for every group, zeros included.
pub fn theme_frequencies(rows: &[InteractionRow]) -> Vec<FrequencyRow> {
    let mut counts: BTreeMap<(String, String, Stage), BTreeMap<ThemeCode, usize>> = BTreeMap::new();
    for row in rows {
        for stage in Stage::ALL {
            if let Some(code) = theme_of(row, stage).filter(|c| c.is_known()) {
                *counts
                    .entry((condition_label(row), row.vignette_id.clone(), stage))
                    .or_default()
                    .entry(code)
                    .or_default() += 1;
            }
        }
    }
    let mut out = Vec::new();
    for ((condition, vignette_id, stage), per_code) in counts {
        let total: usize = per_code.values().sum();
        for code in ThemeCode::CODES {
            let count = per_code.get(&code).copied().unwrap_or(0);
            out.push(FrequencyRow {
                condition: condition.clone(),
                vignette_id: vignette_id.clone(),
                stage,
                code,
                count,
                share: count as f64 / total as f64,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PersistenceRow {
    pub condition: String,
    pub code: ThemeCode,
    pub n: usize,
    pub rule_share: f64,
    pub reasoning_share: f64,
    pub odds_ratio: OddsRatio,
}

/// Rule-to-reasoning persistence odds ratio of every code per condition,
/// over rows where both stages carry a known code.
pub fn persistence_table(rows: &[InteractionRow], mode: PersistenceMode) -> Vec<PersistenceRow> {
    let mut pairs: BTreeMap<String, (Vec<ThemeCode>, Vec<ThemeCode>)> = BTreeMap::new();
    for row in rows {
        if let (Some(a), Some(b)) = (row.rule_theme, row.reasoning_theme) {
            if a.is_known() && b.is_known() {
                let e = pairs.entry(condition_label(row)).or_default();
                e.0.push(a);
                e.1.push(b);
            }
        }
    }
    let mut out = Vec::new();
    for (condition, (a, b)) in pairs {
        let n = a.len();
        for code in ThemeCode::CODES {
            let odds_ratio = persistence_odds_ratio(&a, &b, &code, mode).unwrap_or(OddsRatio::Undefined);
            out.push(PersistenceRow {
                condition: condition.clone(),
                code,
                n,
                rule_share: a.iter().filter(|c| **c == code).count() as f64 / n as f64,
                reasoning_share: b.iter().filter(|c| **c == code).count() as f64 / n as f64,
                odds_ratio,
            });
        }
    }
    out
}
