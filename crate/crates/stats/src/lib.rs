//! Statistical routines used to analyse deliberation-game logs: goodness of
//! fit and pairwise proportion tests with FDR control, logistic GLM and GEE,
//! Cohen's kappa, stage-persistence odds ratios, PCA and Ward clustering.
//!
//! Everything here is pure computation over slices and dense matrices.

pub mod design;
pub mod error;
pub mod gee;
pub mod glm;
pub mod hypothesis;
pub mod kappa;
pub mod pca;
pub mod persistence;
pub mod special;
pub mod ward;

pub use design::{Design, DesignBuilder};
pub use error::{Result, StatsError};
pub use gee::{gee_logit_exchangeable, GeeCoefficient, GeeOptions, GeeResult};
pub use glm::{glm_logit, Coefficient, FitResult, Z_95};
pub use hypothesis::{
    benjamini_hochberg, chi_square_gof, pairwise_two_prop, two_prop_z, Df, PairwiseComparison, TestResult,
};
pub use kappa::{cohens_kappa, kappa_from_confusion, KappaResult};
pub use pca::{pca, PcaResult};
pub use persistence::{persistence_odds_ratio, OddsRatio, PersistenceMode};
pub use ward::{ward_cluster, ClusterTree, Merge};
