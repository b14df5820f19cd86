//! Stage-to-stage persistence odds ratios for categorical labels.

use serde::{Deserialize, Serialize};

use crate::error::{Result, StatsError};

/// An odds ratio that may be infinite or undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum OddsRatio {
    Finite(f64),
    Infinite,
    Undefined,
}

impl OddsRatio {
    pub fn value(self) -> Option<f64> {
        match self {
            OddsRatio::Finite(v) => Some(v),
            OddsRatio::Infinite => Some(f64::INFINITY),
            OddsRatio::Undefined => None,
        }
    }

    fn from_parts(num: f64, den: f64) -> Self {
        match (num > 0.0, den > 0.0) {
            (_, true) => OddsRatio::Finite(num / den),
            (true, false) => OddsRatio::Infinite,
            (false, false) => OddsRatio::Undefined,
        }
    }
}

impl std::fmt::Display for OddsRatio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OddsRatio::Finite(v) => write!(f, "{v:.4}"),
            OddsRatio::Infinite => write!(f, "inf"),
            OddsRatio::Undefined => write!(f, "NA"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PersistenceMode {
    /// `odds_B(theme) / odds_A(theme)` from each stage's marginal frequency.
    #[default]
    Marginal,
    /// Cross-product ratio of the paired 2x2 table (theme at A) x (theme at B).
    Conditional,
}

fn odds(p: f64) -> f64 {
    p / (1.0 - p)
}

fn marginal(hits_a: usize, hits_b: usize, n: usize) -> OddsRatio {
    match (hits_a, hits_b) {
        (0, 0) => OddsRatio::Undefined,
        (0, _) => OddsRatio::Infinite,
        (_, 0) => OddsRatio::Finite(0.0),
        (a, b) if a == n && b == n => OddsRatio::Undefined,
        (a, _) if a == n => OddsRatio::Finite(0.0),
        (_, b) if b == n => OddsRatio::Infinite,
        (a, b) => OddsRatio::Finite(odds(b as f64 / n as f64) / odds(a as f64 / n as f64)),
    }
}

/// Persistence odds ratio of `label` between paired stage labels.
///
/// `stage_a[i]` and `stage_b[i]` belong to the same record.
pub fn persistence_odds_ratio<L: PartialEq>(
    stage_a: &[L],
    stage_b: &[L],
    label: &L,
    mode: PersistenceMode,
) -> Result<OddsRatio> {
    if stage_a.is_empty() {
        return Err(StatsError::InvalidInput("no paired records".into()));
    }
    if stage_a.len() != stage_b.len() {
        return Err(StatsError::InvalidInput(format!(
            "stage label vectors differ in length ({} vs {})",
            stage_a.len(),
            stage_b.len()
        )));
    }
    let n = stage_a.len();
    match mode {
        PersistenceMode::Marginal => {
            let ha = stage_a.iter().filter(|l| *l == label).count();
            let hb = stage_b.iter().filter(|l| *l == label).count();
            Ok(marginal(ha, hb, n))
        }
        PersistenceMode::Conditional => {
            let mut t = [[0usize; 2]; 2];
            for (a, b) in stage_a.iter().zip(stage_b) {
                t[usize::from(a == label)][usize::from(b == label)] += 1;
            }
            let num = (t[1][1] * t[0][0]) as f64;
            let den = (t[1][0] * t[0][1]) as f64;
            Ok(OddsRatio::from_parts(num, den))
        }
    }
}
