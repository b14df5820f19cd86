//! Simulation oracles for the exchangeable GEE.

use nomiclaw_stats::{gee_logit_exchangeable, glm_logit, DesignBuilder, GeeOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[path = "support/clusters.rs"]
mod clusters;

use clusters::correlated_clusters;

#[test]
fn recovers_injected_exchangeable_correlation() {
    for seed in [1u64, 2, 3] {
        let (cov, y, ids) = correlated_clusters(seed, 200, 5, 0.3);
        let d = DesignBuilder::new(y.len()).intercept().numeric("treated", &cov).unwrap().build();
        let fit = gee_logit_exchangeable(&d, &y, &ids, GeeOptions::default()).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.n_clusters, 200);
        assert!((fit.alpha - 0.3).abs() < 0.1, "seed {seed}: alpha = {}", fit.alpha);
        // clustering inflates the robust SE of the cluster-level covariate
        let t = fit.coefficient("treated").unwrap();
        assert!(t.robust_se > t.naive_se);
    }
}

#[test]
fn independent_data_gives_alpha_near_zero() {
    let (cov, y, ids) = correlated_clusters(9, 200, 5, 0.0);
    let d = DesignBuilder::new(y.len()).intercept().numeric("treated", &cov).unwrap().build();
    let fit = gee_logit_exchangeable(&d, &y, &ids, GeeOptions::default()).unwrap();
    assert!(fit.alpha.abs() < 0.1, "alpha = {}", fit.alpha);
}

#[test]
fn singleton_clusters_robust_close_to_model_based() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 4000;
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|&xi| {
            let p = 1.0 / (1.0 + (-(0.2 + 0.8 * xi)).exp());
            if rng.gen_bool(p) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let ids: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let d = DesignBuilder::new(n).intercept().numeric("x", &x).unwrap().build();
    let gee = gee_logit_exchangeable(&d, &y, &ids, GeeOptions::default()).unwrap();
    let glm = glm_logit(&d, &y).unwrap();
    for (g, m) in gee.coefficients.iter().zip(&glm.coefficients) {
        assert!((g.estimate - m.estimate).abs() < 1e-6);
        assert!(g.robust_se >= 0.0);
        let ratio = g.robust_se / m.std_error;
        assert!((ratio - 1.0).abs() < 0.15, "{}: robust/model = {ratio}", g.name);
    }
}
