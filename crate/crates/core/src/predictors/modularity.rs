//! Greedy agglomerative modularity maximization and block densities.

use std::collections::BTreeMap;

use crate::graph::{Graph, NodeId, NodePair};

/// Repeatedly merges the pair of adjacent communities with the largest
/// modularity gain while some gain is positive. Ties go to the smallest
/// community pair, so the result is deterministic. Returns dense community
/// labels in order of first appearance.
pub fn greedy_modularity(g: &Graph) -> Vec<usize> {
    let n = g.node_count();
    let m = g.edge_count();
    if m == 0 {
        return (0..n).collect();
    }
    let two_m = 2.0 * m as f64;
    // e[i][j]: fraction of edge ends from community i to j (i != j), halved
    let mut e: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    let mut a: Vec<f64> = (0..n).map(|v| g.deg(v) as f64 / two_m).collect();
    for p in g.edges() {
        *e[p.u()].entry(p.v()).or_insert(0.0) += 1.0 / two_m;
        *e[p.v()].entry(p.u()).or_insert(0.0) += 1.0 / two_m;
    }
    let mut parent: Vec<usize> = (0..n).collect();
    let mut alive = vec![true; n];
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            for (&j, &eij) in &e[i] {
                if j <= i {
                    continue;
                }
                let dq = 2.0 * (eij - a[i] * a[j]);
                if best.is_none_or(|(b, _, _)| dq > b + 1e-15) {
                    best = Some((dq, i, j));
                }
            }
        }
        let Some((dq, i, j)) = best else { break };
        if dq <= 1e-15 {
            break;
        }
        // merge j into i
        let row_j = std::mem::take(&mut e[j]);
        for (k, w) in row_j {
            if k == i {
                continue;
            }
            *e[i].entry(k).or_insert(0.0) += w;
            let row_k = &mut e[k];
            row_k.remove(&j);
            *row_k.entry(i).or_insert(0.0) += w;
        }
        e[i].remove(&j);
        a[i] += a[j];
        a[j] = 0.0;
        alive[j] = false;
        parent[j] = i;
    }
    let root = |mut v: usize| {
        while parent[v] != v {
            v = parent[v];
        }
        v
    };
    relabel(&(0..n).map(root).collect::<Vec<_>>())
}

/// Dense labels `0..B` in order of first appearance.
pub fn relabel(raw: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    let mut out = Vec::with_capacity(raw.len());
    for &r in raw {
        let next = map.len();
        out.push(*map.entry(r).or_insert(next));
    }
    out
}

/// Communities plus the empirical edge density between every block pair.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDensity {
    pub membership: Vec<usize>,
    density: Vec<Vec<f64>>,
}

impl BlockDensity {
    pub fn fit(g: &Graph) -> Self {
        let membership = greedy_modularity(g);
        Self::from_membership(g, membership)
    }

    pub fn from_membership(g: &Graph, membership: Vec<usize>) -> Self {
        let blocks = membership.iter().max().map_or(0, |b| b + 1);
        let mut sizes = vec![0usize; blocks];
        for &b in &membership {
            sizes[b] += 1;
        }
        let mut edges = vec![vec![0usize; blocks]; blocks];
        for p in g.edges() {
            let (r, s) = (membership[p.u()], membership[p.v()]);
            edges[r][s] += 1;
            if r != s {
                edges[s][r] += 1;
            }
        }
        let density = (0..blocks)
            .map(|r| {
                (0..blocks)
                    .map(|s| {
                        let possible = if r == s {
                            sizes[r] * sizes[r].saturating_sub(1) / 2
                        } else {
                            sizes[r] * sizes[s]
                        };
                        if possible == 0 {
                            0.0
                        } else {
                            edges[r][s] as f64 / possible as f64
                        }
                    })
                    .collect()
            })
            .collect();
        Self { membership, density }
    }

    pub fn block_count(&self) -> usize {
        self.density.len()
    }

    pub fn community(&self, v: NodeId) -> usize {
        self.membership[v]
    }

    pub fn density(&self, r: usize, s: usize) -> f64 {
        self.density[r][s]
    }

    pub fn score(&self, p: NodePair) -> f64 {
        self.density[self.membership[p.u()]][self.membership[p.v()]]
    }
}

/// Newman-Girvan modularity of a partition.
pub fn modularity(g: &Graph, membership: &[usize]) -> f64 {
    let m = g.edge_count() as f64;
    let blocks = membership.iter().max().map_or(0, |b| b + 1);
    let mut inside = vec![0.0; blocks];
    let mut degree = vec![0.0; blocks];
    for p in g.edges() {
        if membership[p.u()] == membership[p.v()] {
            inside[membership[p.u()]] += 1.0;
        }
    }
    for v in 0..g.node_count() {
        degree[membership[v]] += g.deg(v) as f64;
    }
    (0..blocks)
        .map(|r| inside[r] / m - (degree[r] / (2.0 * m)).powi(2))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;

    fn bridged_cliques() -> Graph {
        let mut edges = Vec::new();
        for base in [0, 5] {
            for i in 0..5 {
                for j in (i + 1)..5 {
                    edges.push((base + i, base + j));
                }
            }
        }
        edges.push((4, 5));
        Graph::from_edges(10, edges).unwrap()
    }

    #[test]
    fn recovers_bridged_cliques() {
        let g = bridged_cliques();
        let model = BlockDensity::fit(&g);
        assert_eq!(model.membership, vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        assert_eq!(model.density(0, 0), 1.0);
        assert_eq!(model.density(1, 1), 1.0);
        assert_eq!(model.density(0, 1), 1.0 / 25.0);
        assert_eq!(model.score(NodePair::new(0, 9)), model.score(NodePair::new(9, 0)));
    }

    #[test]
    fn greedy_result_beats_every_two_way_split() {
        // exhaustive check over all bipartitions of the 10-node fixture
        let g = bridged_cliques();
        let best = modularity(&g, &greedy_modularity(&g));
        for mask in 0u32..(1 << 10) {
            let part: Vec<usize> = (0..10).map(|v| ((mask >> v) & 1) as usize).collect();
            assert!(modularity(&g, &part) <= best + 1e-12);
        }
    }

    #[test]
    fn single_clique_is_one_community() {
        let g = complete(6);
        let model = BlockDensity::fit(&g);
        assert_eq!(model.block_count(), 1);
        assert_eq!(model.score(NodePair::new(0, 1)), 1.0);
    }
}
