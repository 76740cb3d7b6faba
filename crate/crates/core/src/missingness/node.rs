//! Node-based samplers and depth-first search.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{weighted_order, InducedGrowth, RawSample, SampleContext, SampleError, SamplerKind};
use crate::graph::{PAGERANK_DAMPING, PAGERANK_TOL};

pub(super) fn sample_node_based<R: Rng + ?Sized>(
    ctx: &SampleContext<'_>,
    rng: &mut R,
) -> Result<RawSample, SampleError> {
    let g = ctx.g;
    let n = g.node_count();
    let order: Vec<usize> = match ctx.spec.kind {
        SamplerKind::RandomNode => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            order
        }
        SamplerKind::DegreeBasedNode => {
            let w: Vec<f64> = (0..n).map(|v| g.deg(v) as f64).collect();
            weighted_order(&w, rng)
        }
        SamplerKind::PageRankBasedNode => {
            let pr = g
                .pagerank(PAGERANK_DAMPING, PAGERANK_TOL)
                .map_err(|e| ctx.infeasible(e.to_string()))?;
            weighted_order(&pr, rng)
        }
        other => unreachable!("{other} is not node-based"),
    };
    let mut grow = InducedGrowth::new(g, ctx.target);
    for v in order {
        if grow.add(v) {
            break;
        }
    }
    Ok(grow.finish(rng))
}

/// Depth-first traversal with shuffled neighbor pushes. When the stack
/// empties before the target is reached, the search restarts from a uniform
/// unvisited node.
pub(super) fn sample_dfs<R: Rng + ?Sized>(
    ctx: &SampleContext<'_>,
    rng: &mut R,
) -> Result<RawSample, SampleError> {
    let g = ctx.g;
    let n = g.node_count();
    let mut grow = InducedGrowth::new(g, ctx.target);
    let mut stack = Vec::new();
    let mut scratch = Vec::new();
    'search: while !grow.reached() {
        let unvisited: Vec<usize> = (0..n).filter(|&v| !grow.contains(v)).collect();
        let Some(&start) = unvisited.get(rng.random_range(0..unvisited.len().max(1))) else {
            break;
        };
        stack.push(start);
        while let Some(v) = stack.pop() {
            if grow.contains(v) {
                continue;
            }
            if grow.add(v) {
                break 'search;
            }
            scratch.clear();
            scratch.extend(g.neighbors(v).iter().copied().filter(|&w| !grow.contains(w)));
            scratch.shuffle(rng);
            stack.extend_from_slice(&scratch);
        }
    }
    Ok(grow.finish(rng))
}
