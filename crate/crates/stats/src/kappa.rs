//! Unweighted Cohen's kappa.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub observed_agreement: f64,
    pub expected_agreement: f64,
    pub kappa: f64,
    pub n: usize,
}

pub fn cohens_kappa<L: Ord>(labels_a: &[L], labels_b: &[L]) -> Result<KappaResult> {
    if labels_a.len() != labels_b.len() {
        return Err(StatsError::InvalidInput(format!(
            "label vectors differ in length ({} vs {})",
            labels_a.len(),
            labels_b.len()
        )));
    }
    let n = labels_a.len();
    if n == 0 {
        return Err(StatsError::InvalidInput("no items to compare".into()));
    }
    let mut marg_a: BTreeMap<&L, usize> = BTreeMap::new();
    let mut marg_b: BTreeMap<&L, usize> = BTreeMap::new();
    let mut agree = 0usize;
    for (a, b) in labels_a.iter().zip(labels_b) {
        *marg_a.entry(a).or_default() += 1;
        *marg_b.entry(b).or_default() += 1;
        if a == b {
            agree += 1;
        }
    }
    let nf = n as f64;
    let p_o = agree as f64 / nf;
    let p_e: f64 =
        marg_a.iter().map(|(label, &ca)| ca as f64 * marg_b.get(label).copied().unwrap_or(0) as f64).sum::<f64>()
            / (nf * nf);
    if (1.0 - p_e).abs() < 1e-15 {
        return Err(StatsError::UndefinedKappa);
    }
    Ok(KappaResult { observed_agreement: p_o, expected_agreement: p_e, kappa: (p_o - p_e) / (1.0 - p_e), n })
}

/// Kappa from a square confusion matrix (rows = rater A, columns = rater B).
pub fn kappa_from_confusion(table: &[Vec<u64>]) -> Result<KappaResult> {
    let k = table.len();
    if table.iter().any(|r| r.len() != k) {
        return Err(StatsError::InvalidInput("confusion matrix must be square".into()));
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (i, row) in table.iter().enumerate() {
        for (j, &count) in row.iter().enumerate() {
            for _ in 0..count {
                a.push(i);
                b.push(j);
            }
        }
    }
    cohens_kappa(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_labels() {
        let l = ["JUST", "HARM", "LEG", "JUST"];
        assert_eq!(cohens_kappa(&l, &l).unwrap().kappa, 1.0);
    }

    #[test]
    fn two_by_two_hand_computation() {
        let r = kappa_from_confusion(&[vec![20, 5], vec![10, 15]]).unwrap();
        assert_abs_diff_eq!(r.observed_agreement, 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(r.expected_agreement, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r.kappa, 0.4, epsilon = 1e-14);
        assert_eq!(r.n, 50);
    }

    #[test]
    fn undefined_when_single_shared_label() {
        assert_eq!(cohens_kappa(&["A", "A"], &["A", "A"]), Err(StatsError::UndefinedKappa));
        assert!(cohens_kappa::<&str>(&[], &[]).is_err());
        assert!(cohens_kappa(&["A"], &["A", "B"]).is_err());
    }

    #[test]
    fn independent_random_labels_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a: Vec<u8> = (0..20_000).map(|_| rng.gen_range(0..10)).collect();
        let b: Vec<u8> = (0..20_000).map(|_| rng.gen_range(0..10)).collect();
        let r = cohens_kappa(&a, &b).unwrap();
        assert!(r.kappa.abs() < 0.02, "kappa = {}", r.kappa);
    }

    #[test]
    fn bounded() {
        let r = cohens_kappa(&[0, 1, 0, 1], &[1, 0, 1, 0]).unwrap();
        assert_abs_diff_eq!(r.kappa, -1.0, epsilon = 1e-15);
    }
}
