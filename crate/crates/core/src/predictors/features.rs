//! Topological pair features for the stacking model.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::local::{adamic_adar, common_neighbors, resource_allocation};
use super::modularity::BlockDensity;
use super::PredictError;
use crate::graph::{Graph, NodePair, PAGERANK_DAMPING, PAGERANK_TOL};

pub const FEATURE_NAMES: [&str; 13] = [
    "degree-min",
    "degree-max",
    "common-neighbors",
    "adamic-adar",
    "jaccard",
    "resource-allocation",
    "preferential-attachment",
    "clustering-min",
    "clustering-max",
    "distance",
    "pagerank-min",
    "pagerank-max",
    "same-community",
];

pub const FEATURE_DIMS: usize = FEATURE_NAMES.len();

/// Node-level statistics of one observed graph, shared by all pairs.
#[derive(Clone, Debug)]
pub struct FeatureContext {
    g: Arc<Graph>,
    triangles: Vec<usize>,
    pagerank: Vec<f64>,
    communities: Vec<usize>,
}

fn sorted(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn clustering(triangles: usize, degree: usize) -> f64 {
    if degree < 2 {
        0.0
    } else {
        2.0 * triangles as f64 / (degree * (degree - 1)) as f64
    }
}

impl FeatureContext {
    pub fn new(g: Arc<Graph>) -> Result<Self, PredictError> {
        Ok(Self {
            triangles: g.triangles(),
            pagerank: g.pagerank(PAGERANK_DAMPING, PAGERANK_TOL)?,
            communities: BlockDensity::fit(&g).membership,
            g,
        })
    }

    pub fn distance_sentinel(&self) -> f64 {
        2.0 * self.g.node_count() as f64
    }

    /// Features of `p` on the observed graph; `distance` is precomputed by
    /// the caller (`None` when disconnected).
    fn assemble(&self, p: NodePair, held_out: bool, distance: Option<usize>) -> [f64; FEATURE_DIMS] {
        let g = &*self.g;
        let (u, v) = (p.u(), p.v());
        let drop = usize::from(held_out);
        let (du, dv) = (g.deg(u) - drop, g.deg(v) - drop);
        let cn = common_neighbors(g, p);
        let union = du + dv - cn;
        let jac = if union == 0 { 0.0 } else { cn as f64 / union as f64 };
        // removing the edge itself drops the triangles it closes
        let (tu, tv) = (self.triangles[u] - drop * cn, self.triangles[v] - drop * cn);
        let (dmin, dmax) = sorted(du as f64, dv as f64);
        let (cmin, cmax) = sorted(clustering(tu, du), clustering(tv, dv));
        let (pmin, pmax) = sorted(self.pagerank[u], self.pagerank[v]);
        [
            dmin,
            dmax,
            cn as f64,
            adamic_adar(g, p),
            jac,
            resource_allocation(g, p),
            (du * dv) as f64,
            cmin,
            cmax,
            distance.map_or(self.distance_sentinel(), |d| d as f64),
            pmin,
            pmax,
            f64::from(u8::from(self.communities[u] == self.communities[v])),
        ]
    }

    /// Features of a single pair.
    pub fn extract(&self, p: NodePair) -> [f64; FEATURE_DIMS] {
        let held_out = self.g.contains_pair(&p);
        let d = if held_out {
            self.g.distance_avoiding(p.u(), p.v(), Some(p))
        } else {
            self.g.distance_avoiding(p.u(), p.v(), None)
        };
        self.assemble(p, held_out, d)
    }

    /// Features of many pairs, sharing one BFS per source for non-edges.
    ///
    /// Pairs that are edges of the observed graph are described as if that
    /// edge were absent (endpoint degrees, clustering, shortest path and
    /// neighborhood union exclude it), so training positives look like the
    /// held-out pairs they stand in for.
    pub fn extract_all(&self, pairs: &[NodePair]) -> Vec<[f64; FEATURE_DIMS]> {
        let mut by_source: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut out = vec![[0.0; FEATURE_DIMS]; pairs.len()];
        for (i, p) in pairs.iter().enumerate() {
            if self.g.contains_pair(p) {
                out[i] = self.extract(*p);
            } else {
                by_source.entry(p.u()).or_default().push(i);
            }
        }
        for (source, idx) in by_source {
            let dist = self.g.bfs_distances(source);
            for i in idx {
                let p = pairs[i];
                out[i] = self.assemble(p, false, dist[p.v()]);
            }
        }
        out
    }
}
