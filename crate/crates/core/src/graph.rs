//! Undirected simple graphs with dense node ids.
//!
//! A [`Graph`] is validated once at construction (no self-loops, no
//! duplicate edges, symmetric sorted adjacency) and is immutable afterwards,
//! so every other module may rely on those invariants and share graphs freely
//! between worker threads.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub type NodeId = usize;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: expected two whitespace-separated tokens, found {content:?}")]
    Parse { line: usize, content: String },
    #[error("line {line}: self-loop on node {token:?} rejected")]
    SelfLoop { line: usize, token: String },
    #[error("graph has no edges")]
    Empty,
    #[error("node {node} out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: NodeId, n: usize },
    #[error("self-loop on node {0} rejected")]
    SelfLoopId(NodeId),
    #[error("pagerank did not converge after {iterations} iterations (residual {residual:e})")]
    PageRankDiverged { iterations: usize, residual: f64 },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// An unordered node pair stored canonically with `u < v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodePair {
    u: NodeId,
    v: NodeId,
}

impl NodePair {
    /// Canonical pair of two distinct nodes.
    ///
    /// Panics when `a == b`; use [`NodePair::try_new`] for unchecked input.
    pub fn new(a: NodeId, b: NodeId) -> Self {
        Self::try_new(a, b).expect("a node pair needs two distinct endpoints")
    }

    pub fn try_new(a: NodeId, b: NodeId) -> Option<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Self { u: a, v: b }),
            std::cmp::Ordering::Greater => Some(Self { u: b, v: a }),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn u(&self) -> NodeId {
        self.u
    }

    pub fn v(&self) -> NodeId {
        self.v
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.u == node || self.v == node
    }
}

impl fmt::Display for NodePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.u, self.v)
    }
}

/// A set of canonical node pairs with deterministic (sorted) iteration.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EdgeSet(BTreeSet<NodePair>);

impl EdgeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn insert(&mut self, pair: NodePair) -> bool {
        self.0.insert(pair)
    }

    pub fn remove(&mut self, pair: &NodePair) -> bool {
        self.0.remove(pair)
    }

    pub fn contains(&self, pair: &NodePair) -> bool {
        self.0.contains(pair)
    }

    pub fn iter(&self) -> impl Iterator<Item = &NodePair> + '_ {
        self.0.iter()
    }

    pub fn union(&self, other: &EdgeSet) -> EdgeSet {
        EdgeSet(self.0.union(&other.0).copied().collect())
    }

    pub fn difference(&self, other: &EdgeSet) -> EdgeSet {
        EdgeSet(self.0.difference(&other.0).copied().collect())
    }

    pub fn is_subset(&self, other: &EdgeSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn to_vec(&self) -> Vec<NodePair> {
        self.0.iter().copied().collect()
    }
}

impl FromIterator<NodePair> for EdgeSet {
    fn from_iter<I: IntoIterator<Item = NodePair>>(iter: I) -> Self {
        EdgeSet(iter.into_iter().collect())
    }
}

impl IntoIterator for EdgeSet {
    type Item = NodePair;
    type IntoIter = std::collections::btree_set::IntoIter<NodePair>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a EdgeSet {
    type Item = &'a NodePair;
    type IntoIter = std::collections::btree_set::Iter<'a, NodePair>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

#[derive(Clone, Debug)]
pub struct Graph {
    adjacency: Vec<Vec<NodeId>>,
    labels: Vec<String>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph on `n` nodes labelled `"0".."n-1"`.
    ///
    /// Duplicate edges collapse; self-loops and out-of-range ids are errors.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let labels = (0..n).map(|i| i.to_string()).collect();
        Self::with_labels(labels, edges)
    }

    pub fn with_labels<I>(labels: Vec<String>, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let n = labels.len();
        let mut adjacency = vec![Vec::new(); n];
        for (a, b) in edges {
            for node in [a, b] {
                if node >= n {
                    return Err(GraphError::NodeOutOfRange { node, n });
                }
            }
            if a == b {
                return Err(GraphError::SelfLoopId(a));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        let mut degree_sum = 0;
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
            degree_sum += list.len();
        }
        let graph = Graph {
            adjacency,
            labels,
            edge_count: degree_sum / 2,
        };
        assert!(graph.check_invariants(), "adjacency must be symmetric and sorted");
        Ok(graph)
    }

    /// Same node set and labels as `self`, restricted to `edges`.
    pub fn with_edge_subset<'a, I>(&self, edges: I) -> Graph
    where
        I: IntoIterator<Item = &'a NodePair>,
    {
        let mut adjacency = vec![Vec::new(); self.node_count()];
        for p in edges {
            adjacency[p.u].push(p.v);
            adjacency[p.v].push(p.u);
        }
        let mut degree_sum = 0;
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
            degree_sum += list.len();
        }
        Graph {
            adjacency,
            labels: self.labels.clone(),
            edge_count: degree_sum / 2,
        }
    }

    fn check_invariants(&self) -> bool {
        let mut sum = 0;
        for (v, list) in self.adjacency.iter().enumerate() {
            sum += list.len();
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return false;
            }
            for &w in list {
                if w == v || self.adjacency[w].binary_search(&v).is_err() {
                    return false;
                }
            }
        }
        sum == 2 * self.edge_count
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn label(&self, v: NodeId) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Sorted neighbor list of `v`.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v]
    }

    /// Number of neighbors of `v`.
    pub fn degree(&self, v: NodeId) -> Result<usize, GraphError> {
        self.adjacency
            .get(v)
            .map(Vec::len)
            .ok_or(GraphError::NodeOutOfRange {
                node: v,
                n: self.node_count(),
            })
    }

    /// Unchecked degree for hot loops; panics on out-of-range ids.
    #[inline]
    pub fn deg(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        a != b && self.adjacency[a].binary_search(&b).is_ok()
    }

    pub fn contains_pair(&self, p: &NodePair) -> bool {
        self.adjacency[p.u].binary_search(&p.v).is_ok()
    }

    /// All edges in canonical sorted order.
    pub fn edges(&self) -> impl Iterator<Item = NodePair> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, list)| {
            list.iter()
                .filter(move |&&v| v > u)
                .map(move |&v| NodePair { u, v })
        })
    }

    pub fn edge_set(&self) -> EdgeSet {
        self.edges().collect()
    }

    /// Number of unordered non-adjacent node pairs.
    pub fn non_edge_count(&self) -> usize {
        let n = self.node_count();
        n * n.saturating_sub(1) / 2 - self.edge_count
    }

    /// Edges of `self` with both endpoints in `nodes`.
    pub fn induced_edges(&self, nodes: &[NodeId]) -> Result<EdgeSet, GraphError> {
        let n = self.node_count();
        let mut member = vec![false; n];
        for &v in nodes {
            if v >= n {
                return Err(GraphError::NodeOutOfRange { node: v, n });
            }
            member[v] = true;
        }
        Ok(self.induced_edges_by_mask(&member))
    }

    pub fn induced_edges_by_mask(&self, member: &[bool]) -> EdgeSet {
        let mut out = EdgeSet::new();
        for (u, list) in self.adjacency.iter().enumerate() {
            if !member[u] {
                continue;
            }
            for &v in list {
                if v > u && member[v] {
                    out.insert(NodePair { u, v });
                }
            }
        }
        out
    }

    /// Breadth-first hop distances from `source`; `None` for unreachable nodes.
    pub fn bfs_distances(&self, source: NodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(x) = queue.pop_front() {
            let d = dist[x].unwrap() + 1;
            for &y in &self.adjacency[x] {
                if dist[y].is_none() {
                    dist[y] = Some(d);
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Hop distance between `a` and `b`, ignoring the edge `skip` if given.
    pub fn distance_avoiding(
        &self,
        a: NodeId,
        b: NodeId,
        skip: Option<NodePair>,
    ) -> Option<usize> {
        if a == b {
            return Some(0);
        }
        let mut dist = vec![usize::MAX; self.node_count()];
        dist[a] = 0;
        let mut queue = VecDeque::from([a]);
        while let Some(x) = queue.pop_front() {
            let d = dist[x] + 1;
            for &y in &self.adjacency[x] {
                if dist[y] != usize::MAX {
                    continue;
                }
                if let Some(s) = skip {
                    if s.contains(x) && s.contains(y) {
                        continue;
                    }
                }
                if y == b {
                    return Some(d);
                }
                dist[y] = d;
                queue.push_back(y);
            }
        }
        None
    }

    /// A shortest `u`–`v` path drawn uniformly among all shortest paths.
    pub fn shortest_path(&self, u: NodeId, v: NodeId, seed: u64) -> Option<Vec<NodeId>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.random_shortest_path(u, v, &mut rng)
    }

    /// Like [`Graph::shortest_path`] but drawing from a caller-owned rng.
    pub fn random_shortest_path<R: Rng + ?Sized>(
        &self,
        u: NodeId,
        v: NodeId,
        rng: &mut R,
    ) -> Option<Vec<NodeId>> {
        if u == v {
            return Some(vec![u]);
        }
        let n = self.node_count();
        let mut dist = vec![usize::MAX; n];
        // shortest-path counts
        let mut sigma = vec![0.0f64; n];
        dist[u] = 0;
        sigma[u] = 1.0;
        let mut queue = VecDeque::from([u]);
        while let Some(x) = queue.pop_front() {
            if dist[x] >= dist[v] {
                break;
            }
            for &y in &self.adjacency[x] {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
                if dist[y] == dist[x] + 1 {
                    sigma[y] += sigma[x];
                }
            }
        }
        if dist[v] == usize::MAX {
            return None;
        }
        let mut path = vec![v];
        let mut cur = v;
        while cur != u {
            let preds: Vec<NodeId> = self.adjacency[cur]
                .iter()
                .copied()
                .filter(|&p| dist[p] != usize::MAX && dist[p] + 1 == dist[cur])
                .collect();
            let total: f64 = preds.iter().map(|&p| sigma[p]).sum();
            let mut x = rng.random::<f64>() * total;
            let mut chosen = *preds.last().unwrap();
            for &p in &preds {
                if x < sigma[p] {
                    chosen = p;
                    break;
                }
                x -= sigma[p];
            }
            path.push(chosen);
            cur = chosen;
        }
        path.reverse();
        Some(path)
    }

    /// Maximal connected node sets, each sorted, ordered by smallest member.
    pub fn connected_components(&self) -> Vec<Vec<NodeId>> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut stack = vec![s];
            while let Some(x) = stack.pop() {
                for &y in &self.adjacency[x] {
                    if !seen[y] {
                        seen[y] = true;
                        comp.push(y);
                        stack.push(y);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Whether the subgraph spanned by `nodes` and `edges` is connected.
    pub fn is_connected_sample(nodes: &[NodeId], edges: &EdgeSet) -> bool {
        if nodes.is_empty() {
            return true;
        }
        let index: HashMap<NodeId, usize> =
            nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut local = vec![Vec::new(); nodes.len()];
        for p in edges {
            let (Some(&a), Some(&b)) = (index.get(&p.u), index.get(&p.v)) else {
                return false;
            };
            local[a].push(b);
            local[b].push(a);
        }
        let mut seen = vec![false; nodes.len()];
        seen[0] = true;
        let mut stack = vec![0];
        let mut count = 1;
        while let Some(x) = stack.pop() {
            for &y in &local[x] {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    stack.push(y);
                }
            }
        }
        count == nodes.len()
    }

    /// Number of triangles through each node.
    pub fn triangles(&self) -> Vec<usize> {
        (0..self.node_count())
            .map(|v| {
                let list = &self.adjacency[v];
                let mut t = 0;
                for (i, &a) in list.iter().enumerate() {
                    for &b in &list[i + 1..] {
                        if self.has_edge(a, b) {
                            t += 1;
                        }
                    }
                }
                t
            })
            .collect()
    }

    /// PageRank with uniform teleport; dangling mass is spread uniformly.
    pub fn pagerank(&self, damping: f64, tol: f64) -> Result<Vec<f64>, GraphError> {
        self.pagerank_with_limit(damping, tol, PAGERANK_MAX_ITERATIONS)
    }

    pub fn pagerank_with_limit(
        &self,
        damping: f64,
        tol: f64,
        max_iterations: usize,
    ) -> Result<Vec<f64>, GraphError> {
        let n = self.node_count();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let uniform = 1.0 / n as f64;
        let mut rank = vec![uniform; n];
        let mut next = vec![0.0; n];
        let mut residual = f64::INFINITY;
        for _ in 0..max_iterations {
            let dangling: f64 = (0..n)
                .filter(|&v| self.adjacency[v].is_empty())
                .map(|v| rank[v])
                .sum();
            let base = (1.0 - damping) * uniform + damping * dangling * uniform;
            next.iter_mut().for_each(|x| *x = base);
            for (v, list) in self.adjacency.iter().enumerate() {
                if list.is_empty() {
                    continue;
                }
                let share = damping * rank[v] / list.len() as f64;
                for &w in list {
                    next[w] += share;
                }
            }
            residual = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
            std::mem::swap(&mut rank, &mut next);
            if residual < tol {
                let total: f64 = rank.iter().sum();
                rank.iter_mut().for_each(|x| *x /= total);
                return Ok(rank);
            }
        }
        Err(GraphError::PageRankDiverged {
            iterations: max_iterations,
            residual,
        })
    }
}

pub const PAGERANK_DAMPING: f64 = 0.85;
pub const PAGERANK_TOL: f64 = 1e-10;
pub const PAGERANK_MAX_ITERATIONS: usize = 1000;

/// Parses an edge list: one `tokenA tokenB` per line, `#` comments and blank
/// lines skipped. Tokens map to dense ids in first-seen order.
pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut ids: HashMap<&str, NodeId> = HashMap::new();
    let mut labels = Vec::new();
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let (Some(a), Some(b), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(GraphError::Parse {
                line: idx + 1,
                content: raw.to_string(),
            });
        };
        if a == b {
            return Err(GraphError::SelfLoop {
                line: idx + 1,
                token: a.to_string(),
            });
        }
        let mut ends = [0; 2];
        for (slot, tok) in ends.iter_mut().zip([a, b]) {
            *slot = *ids.entry(tok).or_insert_with(|| {
                labels.push(tok.to_string());
                labels.len() - 1
            });
        }
        let [ia, ib] = ends;
        edges.push((ia, ib));
    }
    if edges.is_empty() {
        return Err(GraphError::Empty);
    }
    Graph::with_labels(labels, edges)
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph, GraphError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_edge_list(&text)
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn parses_path_and_dedups() {
        let g = parse_edge_list("0 1\n1 2").unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (3, 2));
        assert_eq!(g.neighbors(1), &[0, 2]);
        let g = parse_edge_list("0 1\n0 1\n1 0").unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse_edge_list("# header\na b\nc\n") {
            Err(GraphError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match parse_edge_list("a b\nx x\n") {
            Err(GraphError::SelfLoop { line, token }) => {
                assert_eq!(line, 2);
                assert_eq!(token, "x");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_edge_list("# nothing\n\n"), Err(GraphError::Empty)));
        assert!(matches!(
            parse_edge_list("a b c\n"),
            Err(GraphError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn labels_follow_first_seen_order() {
        let g = parse_edge_list("carol alice\n\talice   bob\n").unwrap();
        assert_eq!(g.labels(), &["carol", "alice", "bob"]);
        assert!(g.has_edge(1, 2));
    }

    #[test]
    fn degrees() {
        let s = star(4);
        assert_eq!(s.degree(0).unwrap(), 4);
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        assert_eq!(g.degree(2).unwrap(), 0);
        assert!(matches!(g.degree(3), Err(GraphError::NodeOutOfRange { .. })));
        let p = path(3);
        let sum: usize = (0..3).map(|v| p.deg(v)).sum();
        assert_eq!(sum, 2 * p.edge_count());
    }

    #[test]
    fn induced_edges_examples() {
        let k3 = complete(3);
        let e = k3.induced_edges(&[0, 1]).unwrap();
        assert_eq!(e.to_vec(), vec![NodePair::new(0, 1)]);
        assert_eq!(k3.induced_edges(&[0, 1, 2]).unwrap(), k3.edge_set());
        assert!(cycle(4).induced_edges(&[0, 2]).unwrap().is_empty());
        assert!(k3.induced_edges(&[5]).is_err());
    }

    #[test]
    fn pagerank_symmetry_and_dominance() {
        let pr = cycle(5).pagerank(0.85, 1e-12).unwrap();
        for x in &pr {
            assert!((x - 0.2).abs() < 1e-10);
        }
        let pr = star(3).pagerank(0.85, 1e-12).unwrap();
        assert!(pr[0] > pr[1]);
        assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn pagerank_reports_non_convergence() {
        let err = star(3).pagerank_with_limit(0.85, 1e-300, 5).unwrap_err();
        assert!(matches!(err, GraphError::PageRankDiverged { iterations: 5, .. }));
    }

    #[test]
    fn shortest_path_examples() {
        let p4 = path(4);
        assert_eq!(p4.shortest_path(0, 3, 7).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(p4.shortest_path(2, 2, 7).unwrap(), vec![2]);
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert!(g.shortest_path(0, 3, 1).is_none());
    }

    #[test]
    fn shortest_path_uniform_on_c4() {
        // enumeration: C4 has exactly two 0-2 paths, via 1 or via 3
        let c4 = cycle(4);
        let trials = 10_000;
        let via_one = (0..trials)
            .filter(|&s| c4.shortest_path(0, 2, s as u64).unwrap()[1] == 1)
            .count();
        let freq = via_one as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 0.02, "frequency {freq}");
    }

    #[test]
    fn components() {
        assert_eq!(path(3).connected_components().len(), 1);
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]).unwrap();
        let cc = g.connected_components();
        assert_eq!(cc, vec![vec![0, 1, 2], vec![3, 4, 5]]);
    }

    #[test]
    fn distance_avoiding_skips_edge() {
        let c4 = cycle(4);
        assert_eq!(c4.distance_avoiding(0, 1, None), Some(1));
        assert_eq!(c4.distance_avoiding(0, 1, Some(NodePair::new(0, 1))), Some(3));
        let p = path(2);
        assert_eq!(p.distance_avoiding(0, 1, Some(NodePair::new(0, 1))), None);
    }

    #[test]
    fn triangles_of_k4() {
        assert_eq!(complete(4).triangles(), vec![3; 4]);
        assert_eq!(path(3).triangles(), vec![0; 3]);
    }
}
