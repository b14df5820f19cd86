//! Goodness-of-fit, two-proportion and multiple-testing routines.

use serde::{Deserialize, Serialize};

use crate::error::{Result, StatsError};
use crate::special::{chi_square_sf, normal_two_sided_p};

/// Degrees of freedom attached to a test statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Df {
    None,
    Single(f64),
    Pair(f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub label: String,
    pub statistic: f64,
    pub df: Df,
    pub p_value: f64,
    pub adjusted_p: Option<f64>,
}

/// Pearson chi-square goodness-of-fit of `observed` counts against
/// `expected_proportions` (which must sum to one).
pub fn chi_square_gof(observed: &[f64], expected_proportions: &[f64]) -> Result<TestResult> {
    if observed.len() != expected_proportions.len() {
        return Err(StatsError::InvalidInput(format!(
            "{} observed cells but {} expected proportions",
            observed.len(),
            expected_proportions.len()
        )));
    }
    if observed.len() < 2 {
        return Err(StatsError::InvalidInput("need at least two cells".into()));
    }
    if let Some(i) = observed.iter().position(|&o| !o.is_finite() || o < 0.0) {
        return Err(StatsError::InvalidInput(format!("observed count {i} is negative or not finite")));
    }
    let total_p: f64 = expected_proportions.iter().sum();
    if (total_p - 1.0).abs() > 1e-9 || expected_proportions.iter().any(|&p| p < 0.0) {
        return Err(StatsError::InvalidInput(format!(
            "expected proportions must be non-negative and sum to 1 (got {total_p})"
        )));
    }
    let n: f64 = observed.iter().sum();
    let mut statistic = 0.0;
    for (cell, (&o, &p)) in observed.iter().zip(expected_proportions).enumerate() {
        let e = n * p;
        if e <= 0.0 {
            return Err(StatsError::ZeroExpected { cell });
        }
        statistic += (o - e) * (o - e) / e;
    }
    let df = (observed.len() - 1) as f64;
    Ok(TestResult {
        label: "chi-square goodness of fit".into(),
        statistic,
        df: Df::Single(df),
        p_value: chi_square_sf(statistic, df).clamp(0.0, 1.0),
        adjusted_p: None,
    })
}

/// Pooled two-proportion z-test, two-sided.
pub fn two_prop_z(w1: u64, n1: u64, w2: u64, n2: u64) -> Result<TestResult> {
    if n1 == 0 || n2 == 0 || w1 > n1 || w2 > n2 {
        return Err(StatsError::InvalidInput(format!("need 0 <= w <= n and n > 0, got ({w1}/{n1}) vs ({w2}/{n2})")));
    }
    let (w1f, n1f, w2f, n2f) = (w1 as f64, n1 as f64, w2 as f64, n2 as f64);
    let pooled = (w1f + w2f) / (n1f + n2f);
    if pooled <= 0.0 || pooled >= 1.0 {
        return Err(StatsError::Degenerate(format!("pooled proportion is {pooled}")));
    }
    let se = (pooled * (1.0 - pooled) * (1.0 / n1f + 1.0 / n2f)).sqrt();
    let z = (w1f / n1f - w2f / n2f) / se;
    Ok(TestResult {
        label: "two-proportion z".into(),
        statistic: z,
        df: Df::None,
        p_value: normal_two_sided_p(z).clamp(0.0, 1.0),
        adjusted_p: None,
    })
}

/// Benjamini-Hochberg step-up adjustment. Output order matches input order.
///
/// Ties are ranked by a stable sort, so equal inputs keep their relative
/// positions; the running minimum makes their adjusted values equal anyway.
pub fn benjamini_hochberg(p_values: &[f64]) -> Result<Vec<f64>> {
    if let Some(p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(StatsError::InvalidInput(format!("p-value {p} outside [0, 1]")));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));

    let mut adjusted = vec![0.0; m];
    let mut running_min = 1.0f64;
    for (rank0, &idx) in order.iter().enumerate().rev() {
        let rank = (rank0 + 1) as f64;
        let candidate = (p_values[idx] * m as f64 / rank).min(1.0);
        running_min = running_min.min(candidate);
        adjusted[idx] = running_min;
    }
    Ok(adjusted)
}

/// Labelled pairwise comparison of win proportions, BH-adjusted across the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub first: String,
    pub second: String,
    pub result: TestResult,
}

/// Runs [`two_prop_z`] over every unordered pair of `groups` (name, wins, trials),
/// in input order, and fills `adjusted_p` with BH-adjusted values.
pub fn pairwise_two_prop(groups: &[(String, u64, u64)]) -> Result<Vec<PairwiseComparison>> {
    let mut out = Vec::new();
    for i in 0..groups.len() {
        for j in (i + 1)..groups.len() {
            let (a, wa, na) = &groups[i];
            let (b, wb, nb) = &groups[j];
            let mut result = two_prop_z(*wa, *na, *wb, *nb)?;
            result.label = format!("{a} vs {b}");
            out.push(PairwiseComparison { first: a.clone(), second: b.clone(), result });
        }
    }
    let raw: Vec<f64> = out.iter().map(|c| c.result.p_value).collect();
    for (c, adj) in out.iter_mut().zip(benjamini_hochberg(&raw)?) {
        c.result.adjusted_p = Some(adj);
    }
    Ok(out)
}
