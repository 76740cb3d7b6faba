//! Sampler-matched pools of observed and held-out non-edges.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EvalError;
use crate::graph::{Graph, NodePair};
use crate::missingness::{draw_sample, target_edges, Category, SampleOutcome};

pub const DEFAULT_POOL_CAP: usize = 200_000;

/// Non-edges split by the missingness function into observed negatives
/// (the training side) and held-out negatives (the test side).
#[derive(Clone, Debug, PartialEq)]
pub struct NegativePools {
    pub observed: Vec<NodePair>,
    pub held_out: Vec<NodePair>,
}

/// Candidate non-edges: all of them when `n(n-1)/2 <= 4 * pool_cap`,
/// otherwise `2 * pool_cap` distinct ones drawn uniformly by rejection.
pub fn candidate_non_edges<R: Rng + ?Sized>(g: &Graph, pool_cap: usize, rng: &mut R) -> Vec<NodePair> {
    let n = g.node_count();
    let all_pairs = n * n.saturating_sub(1) / 2;
    if all_pairs <= 4 * pool_cap {
        let mut out = Vec::with_capacity(g.non_edge_count());
        for a in 0..n {
            for b in (a + 1)..n {
                if !g.has_edge(a, b) {
                    out.push(NodePair::new(a, b));
                }
            }
        }
        return out;
    }
    let want = g.non_edge_count().min(2 * pool_cap);
    let mut seen = BTreeSet::new();
    while seen.len() < want {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b && !g.has_edge(a, b) {
            seen.insert(NodePair::new(a, b));
        }
    }
    seen.into_iter().collect()
}

/// Applies the missingness function of `outcome` to the non-edges of `g`.
///
/// Edge-based samplers run once more, with the same parameters, on the graph
/// whose edges are the candidate non-edges. For node-driven samplers the
/// sampled node order decides: a non-edge is observed when both endpoints
/// were reached before a cutoff, and the cutoff is the touched set itself
/// unless an earlier prefix already covers the retention share of non-edges.
/// Both pools are capped at `pool_cap` uniformly.
pub fn build_negative_pool(
    g: &Graph,
    outcome: &SampleOutcome,
    retention: f64,
    seed: u64,
    pool_cap: usize,
) -> Result<NegativePools, EvalError> {
    if g.non_edge_count() == 0 {
        return Err(EvalError::CompleteGraph);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates = candidate_non_edges(g, pool_cap, &mut rng);
    let target = target_edges(candidates.len(), retention);
    let (observed, held_out): (Vec<NodePair>, Vec<NodePair>) = if outcome.spec.kind.category() == Category::EdgeBased {
        let complement = Graph::from_edges(g.node_count(), candidates.iter().map(|p| (p.u(), p.v())))
            .expect("candidate pairs are valid");
        let sample = draw_sample(&complement, &outcome.spec, retention, rng.random())?;
        candidates.into_iter().partition(|p| sample.retained.contains(p))
    } else {
        let mut rank = vec![usize::MAX; g.node_count()];
        for (i, &v) in outcome.touched.iter().enumerate() {
            rank[v] = i;
        }
        let key = |p: &NodePair| rank[p.u()].max(rank[p.v()]);
        let mut keys: Vec<usize> = candidates.iter().map(key).collect();
        keys.sort_unstable();
        let inside = keys.iter().filter(|&&k| k < outcome.touched.len()).count();
        let cutoff = if inside <= target || target == 0 {
            outcome.touched.len()
        } else {
            keys[target - 1] + 1
        };
        candidates.into_iter().partition(|p| key(p) < cutoff)
    };
    Ok(NegativePools {
        observed: cap(observed, pool_cap, &mut rng),
        held_out: cap(held_out, pool_cap, &mut rng),
    })
}

fn cap<R: Rng + ?Sized>(pool: Vec<NodePair>, pool_cap: usize, rng: &mut R) -> Vec<NodePair> {
    if pool.len() <= pool_cap {
        return pool;
    }
    let mut picks: Vec<usize> = index::sample(rng, pool.len(), pool_cap).into_vec();
    picks.sort_unstable();
    picks.into_iter().map(|i| pool[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::missingness::SamplerKind;

    #[test]
    fn p3_single_non_edge_goes_to_one_side() {
        let g = path(3);
        for kind in SamplerKind::ALL {
            for seed in 0..20 {
                let Ok(outcome) = draw_sample(&g, &kind.into(), 0.5, seed) else {
                    continue;
                };
                let pools = build_negative_pool(&g, &outcome, 0.5, seed, 100).unwrap();
                assert_eq!(pools.observed.len() + pools.held_out.len(), 1, "{kind}");
            }
        }
    }

    #[test]
    fn full_retention_observes_every_negative() {
        let g = cycle(7);
        let outcome = draw_sample(&g, &SamplerKind::RandomEdge.into(), 1.0, 1).unwrap();
        let pools = build_negative_pool(&g, &outcome, 1.0, 1, 1000).unwrap();
        assert!(pools.held_out.is_empty());
        assert_eq!(pools.observed.len(), g.non_edge_count());
    }

    #[test]
    fn complete_graph_has_no_pool() {
        let g = complete(4);
        let outcome = draw_sample(&g, &SamplerKind::RandomEdge.into(), 0.5, 1).unwrap();
        assert!(matches!(build_negative_pool(&g, &outcome, 0.5, 1, 10), Err(EvalError::CompleteGraph)));
    }

    #[test]
    fn rejection_sampling_for_large_graphs() {
        let g = Graph::from_edges(200, (0..199).map(|i| (i, i + 1))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = candidate_non_edges(&g, 1000, &mut rng);
        assert_eq!(c.len(), 2000);
        assert!(c.iter().all(|p| !g.contains_pair(p)));
    }
}
