//! Principal components of z-scored columns (correlation-matrix PCA).

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Result, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    /// Columns that entered the analysis.
    pub columns: Vec<String>,
    /// Zero-variance columns that were removed before standardizing.
    pub dropped: Vec<String>,
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
    /// Eigenvalues of the correlation matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// Fraction of total variance per component, descending, summing to 1.
    pub variance_explained: Vec<f64>,
    /// `columns x components`; column `k` is the unit eigenvector of component `k`.
    pub loadings: DMatrix<f64>,
    /// `units x components`.
    pub scores: DMatrix<f64>,
}

impl PcaResult {
    /// The standardized input matrix recomputed from all components.
    pub fn reconstruct_standardized(&self) -> DMatrix<f64> {
        &self.scores * self.loadings.transpose()
    }
}

/// Column-standardizes `data` (sample SD) and returns the z-scores together
/// with the surviving column indices, means and SDs.
pub fn standardize(data: &DMatrix<f64>) -> (DMatrix<f64>, Vec<usize>, Vec<f64>, Vec<f64>) {
    let n = data.nrows();
    let mut keep = Vec::new();
    let mut means = Vec::new();
    let mut sds = Vec::new();
    for j in 0..data.ncols() {
        let col = data.column(j);
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        if var.sqrt() > 1e-12 * mean.abs().max(1.0) {
            keep.push(j);
            means.push(mean);
            sds.push(var.sqrt());
        }
    }
    let mut z = DMatrix::zeros(n, keep.len());
    for (k, &j) in keep.iter().enumerate() {
        for i in 0..n {
            z[(i, k)] = (data[(i, j)] - means[k]) / sds[k];
        }
    }
    (z, keep, means, sds)
}

pub fn pca(data: &DMatrix<f64>, names: &[String]) -> Result<PcaResult> {
    let (n, p) = data.shape();
    if names.len() != p {
        return Err(StatsError::InvalidInput(format!("{} names for {p} columns", names.len())));
    }
    if n < 2 {
        return Err(StatsError::InvalidInput("PCA needs at least two units".into()));
    }
    if p < 2 {
        return Err(StatsError::InvalidInput("PCA needs at least two metrics".into()));
    }
    let (z, keep, means, std_devs) = standardize(data);
    let dropped: Vec<String> = (0..p).filter(|j| !keep.contains(j)).map(|j| names[j].clone()).collect();
    for d in &dropped {
        log::warn!("dropping zero-variance column `{d}` from PCA");
    }
    if keep.is_empty() {
        return Err(StatsError::Degenerate("every column has zero variance".into()));
    }

    let corr = z.transpose() * &z / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(corr);
    let mut order: Vec<usize> = (0..keep.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let k = keep.len();
    let mut loadings = DMatrix::zeros(k, k);
    let mut eigenvalues = Vec::with_capacity(k);
    for (c, &src) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(src).into_owned();
        let (imax, _) =
            v.iter().enumerate().fold((0, 0.0f64), |acc, (i, x)| if x.abs() > acc.1 { (i, x.abs()) } else { acc });
        if v[imax] < 0.0 {
            v = -v;
        }
        loadings.set_column(c, &v);
        eigenvalues.push(eig.eigenvalues[src].max(0.0));
    }
    let total: f64 = eigenvalues.iter().sum();
    let variance_explained = eigenvalues.iter().map(|e| e / total).collect();
    let scores = &z * &loadings;

    Ok(PcaResult {
        columns: keep.iter().map(|&j| names[j].clone()).collect(),
        dropped,
        means,
        std_devs,
        eigenvalues,
        variance_explained,
        loadings,
        scores,
    })
}
