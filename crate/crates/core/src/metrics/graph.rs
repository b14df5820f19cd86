use crate::metrics::view::RoundView;

/// Directed voter -> target edges of one round, self-loops included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String)>,
}

pub fn vote_graph(round: &RoundView, nodes: &[String]) -> VoteGraph {
    VoteGraph {
        nodes: nodes.to_vec(),
        edges: round.turns.iter().map(|(v, t)| (v.clone(), t.vote_target.clone())).collect(),
    }
}

/// Ballots over the n(n-1) ordered pairs of distinct nodes. Self-votes
/// count in the numerator, so a round of n ballots always gives 1/(n-1).
pub fn edge_density(graph: &VoteGraph) -> Option<f64> {
    let n = graph.nodes.len();
    (n >= 2).then(|| graph.edges.len() as f64 / (n * (n - 1)) as f64)
}

/// Mean directed clustering coefficient with self-loops removed:
/// C_i = T_i / (d_tot (d_tot - 1) - 2 d_recip), with T_i the number of
/// directed triangles through i, i.e. ((A + A^T)^3)_ii / 2. Nodes with a
/// zero denominator contribute 0.
pub fn clustering_coefficient(graph: &VoteGraph) -> Option<f64> {
    let n = graph.nodes.len();
    if n == 0 {
        return None;
    }
    let idx = |name: &str| graph.nodes.iter().position(|x| x == name);
    let mut a = vec![vec![0u32; n]; n];
    for (v, t) in &graph.edges {
        if let (Some(i), Some(j)) = (idx(v), idx(t)) {
            if i != j {
                a[i][j] = 1;
            }
        }
    }
    let s: Vec<Vec<u32>> = (0..n).map(|i| (0..n).map(|j| a[i][j] + a[j][i]).collect()).collect();
    let mut total = 0.0;
    for i in 0..n {
        let mut cube = 0u32;
        for j in 0..n {
            for h in 0..n {
                cube += s[i][j] * s[j][h] * s[h][i];
            }
        }
        let triangles = f64::from(cube) / 2.0;
        let d_out: u32 = a[i].iter().sum();
        let d_in: u32 = (0..n).map(|j| a[j][i]).sum();
        let d_recip: u32 = (0..n).map(|j| a[i][j] * a[j][i]).sum();
        let d_tot = f64::from(d_out + d_in);
        let denom = d_tot * (d_tot - 1.0) - 2.0 * f64::from(d_recip);
        if denom > 0.0 {
            total += triangles / denom;
        }
    }
    Some(total / n as f64)
}
