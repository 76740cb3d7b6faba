//! Spectral node embeddings from the symmetric-normalized adjacency matrix.

use super::skipgram::Embedding;
use super::PredictError;
use crate::graph::Graph;
use crate::linalg::{lanczos_top, EigenPairs};

pub const SPECTRAL_TOL: f64 = 1e-8;

/// Leading eigenpairs of `D^{-1/2} A D^{-1/2}`; isolated nodes get zero rows.
pub fn normalized_adjacency_eigenpairs(g: &Graph, k: usize, seed: u64) -> Result<EigenPairs, PredictError> {
    let n = g.node_count();
    if k > n {
        return Err(PredictError::Config(format!("{k} spectral dimensions exceed {n} nodes")));
    }
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|v| if g.deg(v) > 0 { 1.0 / (g.deg(v) as f64).sqrt() } else { 0.0 })
        .collect();
    let apply = |x: &[f64], y: &mut [f64]| {
        for v in 0..n {
            let mut s = 0.0;
            for &w in g.neighbors(v) {
                s += inv_sqrt[w] * x[w];
            }
            y[v] = inv_sqrt[v] * s;
        }
    };
    Ok(lanczos_top(n, k, apply, seed, SPECTRAL_TOL)?)
}

/// Node `v` is represented by the `v`-th entries of the leading `dims`
/// eigenvectors.
pub fn spectral_embedding(g: &Graph, dims: usize, seed: u64) -> Result<Embedding, PredictError> {
    if g.edge_count() == 0 {
        return Err(PredictError::NoEdges);
    }
    let k = dims.min(g.node_count());
    let pairs = normalized_adjacency_eigenpairs(g, k, seed)?;
    let rows: Vec<Vec<f64>> = (0..g.node_count())
        .map(|v| pairs.vectors.iter().map(|vec| vec[v]).collect())
        .collect();
    Ok(Embedding::from_rows(&rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barbell_second_vector_splits_cliques() {
        let mut edges = Vec::new();
        for base in [0, 5] {
            for i in 0..5 {
                for j in (i + 1)..5 {
                    edges.push((base + i, base + j));
                }
            }
        }
        edges.push((4, 5));
        let g = Graph::from_edges(10, edges).unwrap();
        let pairs = normalized_adjacency_eigenpairs(&g, 2, 7).unwrap();
        assert!((pairs.values[0] - 1.0).abs() < 1e-8);
        let second = &pairs.vectors[1];
        let left = second[0].signum();
        assert!((0..5).all(|v| second[v].signum() == left));
        assert!((5..10).all(|v| second[v].signum() == -left));
    }

    #[test]
    fn vectors_are_orthonormal() {
        let g = Graph::from_edges(8, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 0), (0, 4)]).unwrap();
        let pairs = normalized_adjacency_eigenpairs(&g, 5, 1).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let d: f64 = pairs.vectors[i].iter().zip(&pairs.vectors[j]).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-8);
            }
        }
    }
}
