use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::protocol::Condition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Metric {
    Svr,
    Avr,
    Wr,
    Vv,
    Vp,
    Ri,
    Csr,
    Bs,
    Ed,
    Cc,
    Fmw,
    Pm,
    Wm,
    Vm,
    Tc,
}

impl Metric {
    pub const ALL: [Metric; 15] = [
        Metric::Svr,
        Metric::Avr,
        Metric::Wr,
        Metric::Vv,
        Metric::Vp,
        Metric::Ri,
        Metric::Csr,
        Metric::Bs,
        Metric::Ed,
        Metric::Cc,
        Metric::Fmw,
        Metric::Pm,
        Metric::Wm,
        Metric::Vm,
        Metric::Tc,
    ];

    /// Voting-behaviour metrics reported in the per-model table.
    pub const INTERACTION: [Metric; 11] = [
        Metric::Svr,
        Metric::Avr,
        Metric::Wr,
        Metric::Vv,
        Metric::Vp,
        Metric::Ri,
        Metric::Csr,
        Metric::Bs,
        Metric::Ed,
        Metric::Cc,
        Metric::Fmw,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Svr => "SVR",
            Metric::Avr => "AVR",
            Metric::Wr => "WR",
            Metric::Vv => "VV",
            Metric::Vp => "VP",
            Metric::Ri => "RI",
            Metric::Csr => "CSR",
            Metric::Bs => "BS",
            Metric::Ed => "ED",
            Metric::Cc => "CC",
            Metric::Fmw => "FMW",
            Metric::Pm => "PM",
            Metric::Wm => "WM",
            Metric::Vm => "VM",
            Metric::Tc => "TC",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// All metric values for one (run, agent) unit; `None` marks an undefined
/// value (empty denominator).
#[derive(Debug, Clone, PartialEq)]
pub struct UnitMetrics {
    pub run_id: String,
    pub vignette_id: String,
    pub agent_id: String,
    pub model_id: String,
    pub condition: Option<Condition>,
    pub values: BTreeMap<Metric, Option<f64>>,
}

impl UnitMetrics {
    pub fn get(&self, m: Metric) -> Option<f64> {
        self.values.get(&m).copied().flatten()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: Option<f64>,
    /// Sample SD (n-1); 0 for a single unit.
    pub sd: Option<f64>,
    pub n: usize,
    pub missing: usize,
}

impl Summary {
    pub fn of(values: &[Option<f64>]) -> Self {
        let xs: Vec<f64> = values.iter().flatten().copied().collect();
        let n = xs.len();
        let missing = values.len() - n;
        if n == 0 {
            return Self { mean: None, sd: None, n, missing };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd =
            if n == 1 { 0.0 } else { (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() };
        Self { mean: Some(mean), sd: Some(sd), n, missing }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    #[default]
    ModelCondition,
    Model,
    Condition,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub model_id: Option<String>,
    pub condition: Option<Condition>,
    pub units: usize,
    pub stats: BTreeMap<Metric, Summary>,
}

/// Mean and SD of every metric per group, groups in key order.
pub fn summarize(units: &[UnitMetrics], grouping: Grouping) -> Vec<MetricReport> {
    let mut groups: BTreeMap<(Option<String>, Option<Condition>), Vec<&UnitMetrics>> = BTreeMap::new();
    for u in units {
        let key = match grouping {
            Grouping::ModelCondition => (Some(u.model_id.clone()), u.condition),
            Grouping::Model => (Some(u.model_id.clone()), None),
            Grouping::Condition => (None, u.condition),
            Grouping::All => (None, None),
        };
        groups.entry(key).or_default().push(u);
    }
    groups
        .into_iter()
        .map(|((model_id, condition), members)| {
            let stats = Metric::ALL
                .into_iter()
                .map(|m| {
                    let vals: Vec<Option<f64>> = members.iter().map(|u| u.get(m)).collect();
                    (m, Summary::of(&vals))
                })
                .collect();
            MetricReport { model_id, condition, units: members.len(), stats }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_examples() {
        let s = Summary::of(&[Some(0.2), Some(0.4)]);
        assert!((s.mean.unwrap() - 0.3).abs() < 1e-12);
        assert!((s.sd.unwrap() - 0.141_421_356_237).abs() < 1e-9);
        let one = Summary::of(&[Some(0.7), None]);
        assert_eq!((one.sd, one.n, one.missing), (Some(0.0), 1, 1));
        assert_eq!(Summary::of(&[None]).mean, None);
    }
}
