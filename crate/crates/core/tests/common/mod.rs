#![allow(dead_code)]

use std::path::PathBuf;

use missbench_core::Graph;
use rand::Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(format!("{name}.txt"))
}

pub fn fixture(name: &str) -> Graph {
    missbench_core::graph::load_edge_list(fixture_path(name)).unwrap()
}

pub fn gnp<R: Rng>(n: usize, p: f64, rng: &mut R) -> Graph {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.random_bool(p) {
                edges.push((a, b));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

/// Configuration model with loops and multi-edges dropped.
pub fn configuration_model<R: Rng>(degrees: &[usize], rng: &mut R) -> Graph {
    use rand::seq::SliceRandom;
    let mut stubs: Vec<usize> = degrees.iter().enumerate().flat_map(|(v, &d)| std::iter::repeat_n(v, d)).collect();
    stubs.shuffle(rng);
    let edges: Vec<(usize, usize)> = stubs.chunks_exact(2).filter(|c| c[0] != c[1]).map(|c| (c[0], c[1])).collect();
    Graph::from_edges(degrees.len(), edges).unwrap()
}

