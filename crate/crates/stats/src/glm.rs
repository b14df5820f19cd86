//! Binomial GLM with logit link fitted by iteratively reweighted least squares.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{Result, StatsError};
use crate::special::normal_two_sided_p;

/// Two-sided 95% Wald multiplier.
pub const Z_95: f64 = 1.96;

const MAX_ITER: usize = 50;
const TOL: f64 = 1e-8;
/// Beyond this magnitude a coefficient is treated as diverging (separation).
const DIVERGENCE: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub z: f64,
    pub p_value: f64,
    pub odds_ratio: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Coefficient {
    pub(crate) fn new(name: &str, estimate: f64, std_error: f64) -> Self {
        let z = estimate / std_error;
        Self {
            name: name.to_string(),
            estimate,
            std_error,
            z,
            p_value: normal_two_sided_p(z),
            odds_ratio: estimate.exp(),
            ci_low: (estimate - Z_95 * std_error).exp(),
            ci_high: (estimate + Z_95 * std_error).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub coefficients: Vec<Coefficient>,
    pub deviance: f64,
    pub null_deviance: f64,
    pub residual_df: usize,
    pub dispersion_ratio: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

pub(crate) fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn check_binary(y: &[f64], n: usize) -> Result<()> {
    if y.len() != n {
        return Err(StatsError::InvalidInput(format!("{} outcomes for {n} design rows", y.len())));
    }
    if let Some(v) = y.iter().find(|v| **v != 0.0 && **v != 1.0) {
        return Err(StatsError::InvalidInput(format!("outcome {v} is not binary")));
    }
    Ok(())
}

fn binomial_deviance(y: &[f64], mu: &[f64]) -> f64 {
    y.iter()
        .zip(mu)
        .map(|(&y, &m)| {
            let m = m.clamp(1e-300, 1.0 - 1e-16);
            if y == 1.0 {
                -2.0 * m.ln()
            } else {
                -2.0 * (1.0 - m).ln()
            }
        })
        .sum()
}

/// Weighted cross-product `X' W X`.
pub(crate) fn weighted_gram(x: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let p = x.ncols();
    let mut g = DMatrix::zeros(p, p);
    for (i, &wi) in w.iter().enumerate() {
        let row = x.row(i);
        for a in 0..p {
            let ra = row[a] * wi;
            if ra == 0.0 {
                continue;
            }
            for b in 0..p {
                g[(a, b)] += ra * row[b];
            }
        }
    }
    g
}

/// Fits `P(y = 1) = logistic(X beta)` by IRLS.
///
/// Stops when the largest coefficient change falls below `1e-8` or after 50
/// iterations. Under (quasi-)separation the coefficients run off; the fit
/// then returns what it has with `converged = false`.
pub fn glm_logit(design: &Design, y: &[f64]) -> Result<FitResult> {
    let x = &design.matrix;
    let (n, p) = (x.nrows(), x.ncols());
    check_binary(y, n)?;
    if n <= p {
        return Err(StatsError::InvalidInput(format!("{n} observations for {p} coefficients")));
    }

    let mut beta = DVector::<f64>::zeros(p);
    let mut converged = false;
    let mut iterations = 0;
    let mut info: Option<DMatrix<f64>> = None;

    while iterations < MAX_ITER {
        iterations += 1;
        let eta = x * &beta;
        let mu: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
        let w: Vec<f64> = mu.iter().map(|&m| (m * (1.0 - m)).max(1e-300)).collect();
        let gram = weighted_gram(x, &w);
        let mut rhs = DVector::<f64>::zeros(p);
        for i in 0..n {
            let z = eta[i] + (y[i] - mu[i]) / w[i];
            let wz = w[i] * z;
            for a in 0..p {
                rhs[a] += x[(i, a)] * wz;
            }
        }
        let Some(chol) = gram.clone().cholesky() else {
            if iterations == 1 {
                return Err(StatsError::Singular("X'WX is not positive definite; design is rank deficient".into()));
            }
            break;
        };
        info = Some(gram);
        let next = chol.solve(&rhs);
        let delta = (&next - &beta).amax();
        beta = next;
        if !delta.is_finite() || beta.amax() > DIVERGENCE {
            break;
        }
        if delta < TOL {
            converged = true;
            break;
        }
    }

    // Refresh the information matrix at the final estimate.
    let eta = x * &beta;
    let mu: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
    let w: Vec<f64> = mu.iter().map(|&m| (m * (1.0 - m)).max(1e-300)).collect();
    let gram = weighted_gram(x, &w);
    let cov = gram
        .clone()
        .try_inverse()
        .or_else(|| info.and_then(|g| g.try_inverse()))
        .ok_or_else(|| StatsError::Singular("information matrix is not invertible".into()))?;

    let coefficients = design
        .names
        .iter()
        .enumerate()
        .map(|(j, name)| Coefficient::new(name, beta[j], cov[(j, j)].max(0.0).sqrt()))
        .collect();

    let deviance = binomial_deviance(y, &mu);
    let ybar = y.iter().sum::<f64>() / n as f64;
    let null_deviance = binomial_deviance(y, &vec![ybar; n]);
    let residual_df = n - p;
    Ok(FitResult {
        coefficients,
        deviance,
        null_deviance,
        residual_df,
        dispersion_ratio: deviance / residual_df as f64,
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::DesignBuilder;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn logit(p: f64) -> f64 {
        (p / (1.0 - p)).ln()
    }

    fn grouped(counts: &[(u32, u32)]) -> (Vec<String>, Vec<f64>) {
        let mut groups = Vec::new();
        let mut y = Vec::new();
        for (g, &(wins, n)) in counts.iter().enumerate() {
            for i in 0..n {
                groups.push(format!("g{g:02}"));
                y.push(if i < wins { 1.0 } else { 0.0 });
            }
        }
        (groups, y)
    }

    #[test]
    fn intercept_only_balanced() {
        let y: Vec<f64> = (0..40).map(|i| (i % 2) as f64).collect();
        let d = DesignBuilder::new(40).intercept().build();
        let fit = glm_logit(&d, &y).unwrap();
        assert!(fit.converged);
        assert_abs_diff_eq!(fit.coefficients[0].estimate, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.coefficients[0].odds_ratio, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn reference_win_table_first_group() {
        let wins = [21, 16, 13, 12, 12, 8, 4, 2, 1, 1];
        let counts: Vec<_> = wins.iter().map(|&w| (w, 120)).collect();
        let (groups, y) = grouped(&counts);
        let d = DesignBuilder::new(y.len()).intercept().factor("m", &groups, Some("g00")).unwrap().build();
        let fit = glm_logit(&d, &y).unwrap();
        assert!(fit.converged);
        // statsmodels GLM(Binomial) on the same data
        let g6 = fit.coefficient("m[g06]").unwrap();
        assert_abs_diff_eq!(g6.estimate, -1.8167, epsilon = 1e-4);
        assert_abs_diff_eq!(g6.std_error, 0.5624, epsilon = 1e-4);
        assert_abs_diff_eq!(g6.ci_low, 0.0540, epsilon = 1e-4);
        assert_abs_diff_eq!(g6.ci_high, 0.4895, epsilon = 1e-4);
        let g7 = fit.coefficient("m[g07]").unwrap();
        assert_abs_diff_eq!(g7.estimate, -2.5269, epsilon = 1e-4);
        assert_abs_diff_eq!(g7.std_error, 0.7525, epsilon = 1e-4);
        assert_abs_diff_eq!(fit.deviance, 581.235_066_776_6, epsilon = 1e-6);
        assert_eq!(fit.residual_df, 1190);
        assert_abs_diff_eq!(fit.dispersion_ratio, 0.488_432_829_224, epsilon = 1e-9);
    }

    #[test]
    fn separation_flags_non_convergence() {
        let y = vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let x = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let d = DesignBuilder::new(6).intercept().numeric("x", &x).unwrap().build();
        let fit = glm_logit(&d, &y).unwrap();
        assert!(!fit.converged);
        assert!(fit.coefficients[1].estimate > 5.0);
    }

    #[test]
    fn rank_deficient_design_errors() {
        let d = DesignBuilder::new(4).intercept().numeric("dup", &[1.0, 1.0, 1.0, 1.0]).unwrap().build();
        assert!(matches!(glm_logit(&d, &[0.0, 1.0, 0.0, 1.0]), Err(StatsError::Singular(_))));
    }

    #[test]
    fn rejects_non_binary() {
        let d = DesignBuilder::new(3).intercept().build();
        assert!(glm_logit(&d, &[0.0, 0.5, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn single_factor_matches_closed_form(
            counts in proptest::collection::vec((1u32..29, 30u32..60), 2..6)
        ) {
            let counts: Vec<_> = counts.into_iter().map(|(w, n)| (w.min(n - 1), n)).collect();
            let (groups, y) = grouped(&counts);
            let d = DesignBuilder::new(y.len()).intercept().factor("m", &groups, None).unwrap().build();
            let fit = glm_logit(&d, &y).unwrap();
            prop_assert!(fit.converged);
            let p = |(w, n): (u32, u32)| w as f64 / n as f64;
            let base = logit(p(counts[0]));
            prop_assert!((fit.coefficients[0].estimate - base).abs() < 1e-6);
            for (k, c) in counts.iter().enumerate().skip(1) {
                let want = logit(p(*c)) - base;
                prop_assert!((fit.coefficients[k].estimate - want).abs() < 1e-6);
                let se = (1.0 / c.0 as f64 + 1.0 / (c.1 - c.0) as f64
                    + 1.0 / counts[0].0 as f64 + 1.0 / (counts[0].1 - counts[0].0) as f64).sqrt();
                prop_assert!((fit.coefficients[k].std_error - se).abs() < 1e-6);
                prop_assert!((fit.coefficients[k].odds_ratio - fit.coefficients[k].estimate.exp()).abs() < 1e-12);
            }
        }
    }
}
