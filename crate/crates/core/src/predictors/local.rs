//! Closed-form local similarity indices.

use crate::graph::{Graph, NodePair};

/// Calls `f` with every common neighbor of `a` and `b`.
pub fn for_each_common_neighbor(g: &Graph, a: usize, b: usize, mut f: impl FnMut(usize)) {
    let (x, y) = (g.neighbors(a), g.neighbors(b));
    let (mut i, mut j) = (0, 0);
    while i < x.len() && j < y.len() {
        match x[i].cmp(&y[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                f(x[i]);
                i += 1;
                j += 1;
            }
        }
    }
}

pub fn common_neighbors(g: &Graph, p: NodePair) -> usize {
    let mut c = 0;
    for_each_common_neighbor(g, p.u(), p.v(), |_| c += 1);
    c
}

/// Sum of `1 / ln deg(z)` over common neighbors `z`.
pub fn adamic_adar(g: &Graph, p: NodePair) -> f64 {
    let mut s = 0.0;
    for_each_common_neighbor(g, p.u(), p.v(), |z| s += 1.0 / (g.deg(z) as f64).ln());
    s
}

/// Sum of `1 / deg(z)` over common neighbors `z`.
pub fn resource_allocation(g: &Graph, p: NodePair) -> f64 {
    let mut s = 0.0;
    for_each_common_neighbor(g, p.u(), p.v(), |z| s += 1.0 / g.deg(z) as f64);
    s
}

/// Shared neighbors over the union of both neighborhoods; 0 when the union is
/// empty.
pub fn jaccard(g: &Graph, p: NodePair) -> f64 {
    let common = common_neighbors(g, p);
    let union = g.deg(p.u()) + g.deg(p.v()) - common;
    if union == 0 {
        0.0
    } else {
        common as f64 / union as f64
    }
}

pub fn preferential_attachment(g: &Graph, p: NodePair) -> f64 {
    (g.deg(p.u()) * g.deg(p.v())) as f64
}
