//! Agglomerative clustering with Ward's minimum-variance linkage.
//!
//! Merge heights are increases in the total within-cluster sum of squares,
//! `n_a n_b / (n_a + n_b) * |c_a - c_b|^2`, so two singletons merge at half
//! their squared distance. Cross-cluster costs are updated with the
//! Lance-Williams recurrence
//!
//! ```text
//! d(k, a+b) = ((n_a + n_k) d(k, a) + (n_b + n_k) d(k, b) - n_k d(a, b)) / (n_a + n_b + n_k)
//! ```
//!
//! Cluster ids follow the usual linkage convention: units are `0..n`, the
//! cluster formed at step `s` is `n + s`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTree {
    pub n_units: usize,
    pub merges: Vec<Merge>,
}

struct Active {
    id: usize,
    size: usize,
    lowest_unit: usize,
}

pub fn ward_cluster(data: &DMatrix<f64>) -> Result<ClusterTree> {
    let n = data.nrows();
    if n < 2 {
        return Err(StatsError::InvalidInput("clustering needs at least two units".into()));
    }
    let total = 2 * n - 1;
    let mut cost = vec![vec![f64::NAN; total]; total];
    for i in 0..n {
        for j in (i + 1)..n {
            let d2: f64 = (0..data.ncols()).map(|c| (data[(i, c)] - data[(j, c)]).powi(2)).sum();
            cost[i][j] = d2 / 2.0;
            cost[j][i] = d2 / 2.0;
        }
    }
    let mut active: Vec<Active> = (0..n).map(|i| Active { id: i, size: 1, lowest_unit: i }).collect();
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..(n - 1) {
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for a in 0..active.len() {
            for b in (a + 1)..active.len() {
                let c = cost[active[a].id][active[b].id];
                let key = {
                    let (x, y) = (active[a].lowest_unit, active[b].lowest_unit);
                    (x.min(y), x.max(y))
                };
                let better = match &best {
                    None => true,
                    Some((bc, bkey, _, _)) => c < *bc || (c == *bc && key < *bkey),
                };
                if better {
                    best = Some((c, key, a, b));
                }
            }
        }
        let (height, _, ia, ib) = best.expect("at least two active clusters");
        let (ia, ib) = if active[ia].lowest_unit <= active[ib].lowest_unit { (ia, ib) } else { (ib, ia) };
        let (a_id, a_n) = (active[ia].id, active[ia].size as f64);
        let (b_id, b_n) = (active[ib].id, active[ib].size as f64);
        let new_id = n + step;
        for k in active.iter() {
            if k.id == a_id || k.id == b_id {
                continue;
            }
            let k_n = k.size as f64;
            let d =
                ((a_n + k_n) * cost[k.id][a_id] + (b_n + k_n) * cost[k.id][b_id] - k_n * height) / (a_n + b_n + k_n);
            cost[k.id][new_id] = d;
            cost[new_id][k.id] = d;
        }
        let size = active[ia].size + active[ib].size;
        let lowest_unit = active[ia].lowest_unit.min(active[ib].lowest_unit);
        merges.push(Merge { left: a_id, right: b_id, height, size });
        let (hi, lo) = (ia.max(ib), ia.min(ib));
        active.remove(hi);
        active.remove(lo);
        active.push(Active { id: new_id, size, lowest_unit });
    }
    Ok(ClusterTree { n_units: n, merges })
}

impl ClusterTree {
    /// Flat assignment into `k` clusters by undoing the last `k - 1` merges.
    /// Labels are numbered in order of each cluster's lowest unit index.
    pub fn cut(&self, k: usize) -> Result<Vec<usize>> {
        let n = self.n_units;
        if k == 0 || k > n {
            return Err(StatsError::InvalidInput(format!("cannot cut {n} units into {k} clusters")));
        }
        let mut parent: Vec<usize> = (0..(2 * n - 1)).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while parent[r] != r {
                r = parent[r];
            }
            let mut c = x;
            while parent[c] != r {
                let next = parent[c];
                parent[c] = r;
                c = next;
            }
            r
        }
        for (s, m) in self.merges.iter().take(n - k).enumerate() {
            let id = n + s;
            let ra = find(&mut parent, m.left);
            let rb = find(&mut parent, m.right);
            parent[ra] = id;
            parent[rb] = id;
        }
        let mut labels = vec![usize::MAX; n];
        let mut roots: Vec<usize> = Vec::new();
        for (u, label) in labels.iter_mut().enumerate() {
            let r = find(&mut parent, u);
            *label = match roots.iter().position(|&x| x == r) {
                Some(i) => i,
                None => {
                    roots.push(r);
                    roots.len() - 1
                }
            };
        }
        Ok(labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive agglomeration: at every step evaluate the within-cluster
    /// sum-of-squares increase of every candidate pair directly from the points.
    fn brute_force(points: &[Vec<f64>]) -> Vec<(Vec<usize>, Vec<usize>, f64)> {
        fn ess(points: &[Vec<f64>], members: &[usize]) -> f64 {
            let d = points[0].len();
            let mut c = vec![0.0; d];
            for &m in members {
                for k in 0..d {
                    c[k] += points[m][k] / members.len() as f64;
                }
            }
            members.iter().map(|&m| (0..d).map(|k| (points[m][k] - c[k]).powi(2)).sum::<f64>()).sum()
        }
        let mut clusters: Vec<Vec<usize>> = (0..points.len()).map(|i| vec![i]).collect();
        let mut out = Vec::new();
        while clusters.len() > 1 {
            let mut best = (f64::INFINITY, 0, 0);
            for a in 0..clusters.len() {
                for b in (a + 1)..clusters.len() {
                    let mut u = clusters[a].clone();
                    u.extend(&clusters[b]);
                    let inc = ess(points, &u) - ess(points, &clusters[a]) - ess(points, &clusters[b]);
                    if inc < best.0 {
                        best = (inc, a, b);
                    }
                }
            }
            let (inc, a, b) = best;
            let mut u = clusters[a].clone();
            u.extend(&clusters[b]);
            u.sort();
            out.push((clusters[a].clone(), clusters[b].clone(), inc));
            clusters.remove(b);
            clusters.remove(a);
            clusters.push(u);
        }
        out
    }

    fn members(tree: &ClusterTree, id: usize) -> Vec<usize> {
        if id < tree.n_units {
            return vec![id];
        }
        let m = tree.merges[id - tree.n_units];
        let mut v = members(tree, m.left);
        v.extend(members(tree, m.right));
        v.sort();
        v
    }

    #[test]
    fn two_units_merge_at_half_squared_distance() {
        let data = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 3.0, 4.0]);
        let t = ward_cluster(&data).unwrap();
        assert_eq!(t.merges, vec![Merge { left: 0, right: 1, height: 12.5, size: 2 }]);
    }

    #[test]
    fn five_points_match_exhaustive_search() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.2], vec![5.0, 5.0], vec![5.5, 4.1], vec![2.6, 9.3]];
        let data = DMatrix::from_fn(5, 2, |i, j| pts[i][j]);
        let tree = ward_cluster(&data).unwrap();
        let oracle = brute_force(&pts);
        assert_eq!(tree.merges.len(), oracle.len());
        for (m, (a, b, h)) in tree.merges.iter().zip(&oracle) {
            let mut got = [members(&tree, m.left), members(&tree, m.right)];
            got.sort();
            let mut want = [a.clone(), b.clone()];
            want.iter_mut().for_each(|v| v.sort());
            want.sort();
            assert_eq!(got, want);
            assert_abs_diff_eq!(m.height, *h, epsilon = 1e-10);
        }
    }

    #[test]
    fn separated_blobs_are_recovered() {
        use rand_distr::{Distribution, Normal};
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let n = 40;
        let data = DMatrix::from_fn(n, 3, |i, _| {
            let centre = if i % 2 == 0 { 0.0 } else { 10.0 };
            centre + noise.sample(&mut rng)
        });
        let labels = ward_cluster(&data).unwrap().cut(2).unwrap();
        for (i, l) in labels.iter().enumerate() {
            assert_eq!(*l, i % 2);
        }
    }

    #[test]
    fn cut_bounds() {
        let data = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 10.0]);
        let t = ward_cluster(&data).unwrap();
        assert_eq!(t.cut(3).unwrap(), vec![0, 1, 2]);
        assert_eq!(t.cut(2).unwrap(), vec![0, 0, 1]);
        assert_eq!(t.cut(1).unwrap(), vec![0, 0, 0]);
        assert!(t.cut(0).is_err());
        assert!(t.cut(4).is_err());
    }

    proptest! {
        #[test]
        fn heights_non_decreasing(values in proptest::collection::vec(-50.0f64..50.0, 4..40)) {
            let n = values.len() / 2;
            prop_assume!(n >= 2);
            let data = DMatrix::from_row_slice(n, 2, &values[..2 * n]);
            let t = ward_cluster(&data).unwrap();
            for w in t.merges.windows(2) {
                prop_assert!(w[1].height >= w[0].height - 1e-9);
            }
            prop_assert_eq!(t.merges.last().unwrap().size, n);
        }
    }
}
