//! Clustered binary data with a known exchangeable correlation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Correlated Bernoulli clusters with exact exchangeable correlation `rho`:
/// `Y_ij = (1 - U_ij) X_ij + U_ij Z_i` with `U ~ Bern(sqrt(rho))` and
/// `X, Z ~ Bern(p_i)` independent, `p_i` constant within the cluster.
pub fn correlated_clusters(seed: u64, clusters: usize, size: usize, rho: f64) -> (Vec<f64>, Vec<f64>, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mix = rho.sqrt();
    let (mut cov, mut y, mut ids) = (Vec::new(), Vec::new(), Vec::new());
    for c in 0..clusters {
        let treated = c % 2 == 1;
        let p = if treated { 0.6 } else { 0.35 };
        let shared = rng.gen_bool(p);
        for _ in 0..size {
            let own = rng.gen_bool(p);
            let v = if rng.gen_bool(mix) { shared } else { own };
            cov.push(if treated { 1.0 } else { 0.0 });
            y.push(if v { 1.0 } else { 0.0 });
            ids.push(format!("run{c:03}"));
        }
    }
    (cov, y, ids)
}
