//! Logistic GEE with an exchangeable working correlation and a robust
//! (sandwich) covariance.
//!
//! Each outer iteration re-estimates the scale `phi` and the common
//! correlation `alpha` by the moment estimators
//!
//! ```text
//! phi   = sum r_ij^2 / (N - p)
//! alpha = sum_i sum_{j<k} r_ij r_ik / (phi * (pairs - p))
//! ```
//!
//! from Pearson residuals `r = (y - mu) / sqrt(mu (1 - mu))`, then takes one
//! Fisher-scoring step on the working-correlation-weighted estimating
//! equations. The Bernoulli variance is not overdispersed, so the naive
//! covariance uses unit scale.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{Result, StatsError};
use crate::glm::{check_binary, glm_logit, sigmoid};
use crate::special::normal_two_sided_p;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeeOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Hold `alpha` fixed instead of estimating it.
    pub fixed_alpha: Option<f64>,
}

impl Default for GeeOptions {
    fn default() -> Self {
        Self { max_iter: 100, tol: 1e-8, fixed_alpha: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeeCoefficient {
    pub name: String,
    pub estimate: f64,
    pub robust_se: f64,
    pub naive_se: f64,
    pub z: f64,
    pub wald_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeeResult {
    pub coefficients: Vec<GeeCoefficient>,
    pub alpha: f64,
    pub scale: f64,
    pub n_clusters: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl GeeResult {
    pub fn coefficient(&self, name: &str) -> Option<&GeeCoefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

struct Cluster {
    label: String,
    rows: Vec<usize>,
}

fn group_rows<S: AsRef<str>>(clusters: &[S]) -> Vec<Cluster> {
    let mut by_label: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, c) in clusters.iter().enumerate() {
        by_label.entry(c.as_ref()).or_default().push(i);
    }
    by_label.into_iter().map(|(label, rows)| Cluster { label: label.to_string(), rows }).collect()
}

fn moment_estimates(groups: &[Cluster], resid: &[f64], p: usize) -> (f64, f64) {
    let n: usize = groups.iter().map(|g| g.rows.len()).sum();
    let ssr: f64 = resid.iter().map(|r| r * r).sum();
    let scale = ssr / (n as f64 - p as f64);
    let mut cross = 0.0;
    let mut pairs = 0.0;
    for g in groups {
        let s: f64 = g.rows.iter().map(|&i| resid[i]).sum();
        let sq: f64 = g.rows.iter().map(|&i| resid[i] * resid[i]).sum();
        cross += (s * s - sq) / 2.0;
        let m = g.rows.len() as f64;
        pairs += m * (m - 1.0) / 2.0;
    }
    let alpha = if pairs - p as f64 > 0.0 { cross / scale / (pairs - p as f64) } else { 0.0 };
    (scale, alpha)
}

/// Per-cluster pieces of the estimating equations.
struct ClusterTerms {
    /// D' V^-1 D
    bread: DMatrix<f64>,
    /// D' V^-1 (y - mu)
    score: DVector<f64>,
}

fn cluster_terms(g: &Cluster, x: &DMatrix<f64>, y: &[f64], mu: &[f64], alpha: f64) -> Result<ClusterTerms> {
    let m = g.rows.len();
    let p = x.ncols();
    let sd: Vec<f64> = g.rows.iter().map(|&i| (mu[i] * (1.0 - mu[i])).max(1e-300).sqrt()).collect();
    let mut v = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            let r = if a == b { 1.0 } else { alpha };
            v[(a, b)] = sd[a] * r * sd[b];
        }
    }
    let chol = v.cholesky().ok_or_else(|| StatsError::SingularCluster { cluster: g.label.clone() })?;
    let mut d = DMatrix::zeros(m, p);
    let mut resid = DVector::zeros(m);
    for (a, &i) in g.rows.iter().enumerate() {
        let w = sd[a] * sd[a];
        for j in 0..p {
            d[(a, j)] = w * x[(i, j)];
        }
        resid[a] = y[i] - mu[i];
    }
    let vinv_d = chol.solve(&d);
    let vinv_r = chol.solve(&resid);
    Ok(ClusterTerms { bread: d.transpose() * vinv_d, score: d.transpose() * vinv_r })
}

/// Fits a logistic GEE with exchangeable working correlation, clustering rows
/// by the labels in `clusters`.
pub fn gee_logit_exchangeable<S: AsRef<str>>(
    design: &Design,
    y: &[f64],
    clusters: &[S],
    options: GeeOptions,
) -> Result<GeeResult> {
    let x = &design.matrix;
    let (n, p) = (x.nrows(), x.ncols());
    check_binary(y, n)?;
    if clusters.len() != n {
        return Err(StatsError::InvalidInput(format!("{} cluster labels for {n} rows", clusters.len())));
    }
    let groups = group_rows(clusters);
    if groups.len() < 2 {
        return Err(StatsError::InvalidInput("GEE needs at least two clusters".into()));
    }

    let start = glm_logit(design, y)?;
    let mut beta = DVector::from_iterator(p, start.coefficients.iter().map(|c| c.estimate));
    let mut alpha = 0.0;
    let mut scale = 1.0;
    let mut converged = false;
    let mut iterations = 0;

    let means = |beta: &DVector<f64>| -> Vec<f64> { (x * beta).iter().map(|&e| sigmoid(e)).collect() };
    let update_dependence = |mu: &[f64]| -> (f64, f64) {
        let resid: Vec<f64> = (0..n).map(|i| (y[i] - mu[i]) / (mu[i] * (1.0 - mu[i])).max(1e-300).sqrt()).collect();
        moment_estimates(&groups, &resid, p)
    };

    while iterations < options.max_iter {
        iterations += 1;
        let mu = means(&beta);
        let (s, a) = update_dependence(&mu);
        scale = s;
        alpha = options.fixed_alpha.unwrap_or(a);

        let mut bread = DMatrix::zeros(p, p);
        let mut score = DVector::zeros(p);
        for g in &groups {
            let t = cluster_terms(g, x, y, &mu, alpha)?;
            bread += t.bread;
            score += t.score;
        }
        let step = bread
            .cholesky()
            .ok_or_else(|| StatsError::Singular("GEE information matrix is not positive definite".into()))?
            .solve(&score);
        beta += &step;
        if step.amax() < options.tol {
            converged = true;
            break;
        }
    }

    let mu = means(&beta);
    if options.fixed_alpha.is_none() {
        let (s, a) = update_dependence(&mu);
        scale = s;
        alpha = a;
    }
    let mut bread = DMatrix::zeros(p, p);
    let mut meat = DMatrix::zeros(p, p);
    for g in &groups {
        let t = cluster_terms(g, x, y, &mu, alpha)?;
        bread += t.bread;
        meat += &t.score * t.score.transpose();
    }
    let bread_inv =
        bread.try_inverse().ok_or_else(|| StatsError::Singular("GEE information matrix is not invertible".into()))?;
    let robust = &bread_inv * meat * &bread_inv;

    let coefficients = design
        .names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let robust_se = robust[(j, j)].max(0.0).sqrt();
            let z = beta[j] / robust_se;
            GeeCoefficient {
                name: name.clone(),
                estimate: beta[j],
                robust_se,
                naive_se: bread_inv[(j, j)].max(0.0).sqrt(),
                z,
                wald_p: normal_two_sided_p(z),
            }
        })
        .collect();

    Ok(GeeResult { coefficients, alpha, scale, n_clusters: groups.len(), iterations, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::DesignBuilder;
    use approx::assert_abs_diff_eq;

    /// Deterministic clustered data; reference values from statsmodels
    /// `GEE(Binomial, Exchangeable)`.
    fn reference_data() -> (Design, Vec<f64>, Vec<String>) {
        let mut x = Vec::new();
        let mut grp = Vec::new();
        let mut y = Vec::new();
        let mut cl = Vec::new();
        for i in 0u64..40 {
            for j in 0u64..5 {
                let xv = ((i * 7 + j * 3) % 5) as f64 / 4.0;
                let g = i % 3;
                let h = (i * 2_654_435_761 + j * 40_503 + 12_345) % 1000;
                let thr = 300.0 + 250.0 * xv + if g == 1 { 150.0 } else { 0.0 } + ((i * 37) % 200) as f64;
                x.push(xv);
                grp.push(format!("{g}"));
                y.push(if (h as f64) < thr { 1.0 } else { 0.0 });
                cl.push(format!("c{i:02}"));
            }
        }
        let d = DesignBuilder::new(y.len())
            .intercept()
            .numeric("x", &x)
            .unwrap()
            .factor("g", &grp, Some("0"))
            .unwrap()
            .build();
        (d, y, cl)
    }

    #[test]
    fn matches_statsmodels_reference() {
        let (d, y, cl) = reference_data();
        let fit = gee_logit_exchangeable(&d, &y, &cl, GeeOptions::default()).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.n_clusters, 40);
        let est = [-0.855_560_826_812, 1.232_060_738_313, 0.868_861_518_507, 0.336_379_833_324];
        let rse = [0.353_984_890_144, 0.534_132_124_59, 0.339_959_970_743, 0.313_037_901_496];
        let nse = [0.315_601_778_814, 0.432_639_387_079, 0.328_977_327_517, 0.321_073_606_345];
        for j in 0..4 {
            assert_abs_diff_eq!(fit.coefficients[j].estimate, est[j], epsilon = 1e-7);
            assert_abs_diff_eq!(fit.coefficients[j].robust_se, rse[j], epsilon = 1e-7);
            assert_abs_diff_eq!(fit.coefficients[j].naive_se, nse[j], epsilon = 1e-7);
        }
        assert_abs_diff_eq!(fit.alpha, -0.044_289_897_813_691, epsilon = 1e-7);
    }

    #[test]
    fn singleton_clusters_reproduce_glm() {
        let (d, y, _) = reference_data();
        let singletons: Vec<String> = (0..y.len()).map(|i| i.to_string()).collect();
        let gee = gee_logit_exchangeable(&d, &y, &singletons, GeeOptions::default()).unwrap();
        let glm = glm_logit(&d, &y).unwrap();
        assert_eq!(gee.alpha, 0.0);
        for (a, b) in gee.coefficients.iter().zip(&glm.coefficients) {
            assert_abs_diff_eq!(a.estimate, b.estimate, epsilon = 1e-6);
            assert_abs_diff_eq!(a.naive_se, b.std_error, epsilon = 1e-6);
        }
    }

    #[test]
    fn singular_working_correlation_names_cluster() {
        let (d, y, cl) = reference_data();
        let opts = GeeOptions { fixed_alpha: Some(1.0), ..GeeOptions::default() };
        match gee_logit_exchangeable(&d, &y, &cl, opts) {
            Err(StatsError::SingularCluster { cluster }) => assert_eq!(cluster, "c00"),
            other => panic!("expected singular cluster error, got {other:?}"),
        }
    }

    #[test]
    fn needs_two_clusters() {
        let (d, y, _) = reference_data();
        let one = vec!["a"; y.len()];
        assert!(gee_logit_exchangeable(&d, &y, &one, GeeOptions::default()).is_err());
    }
}
