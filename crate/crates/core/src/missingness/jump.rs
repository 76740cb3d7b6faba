//! Node-jump samplers: loop-erased walks, walks with jumps, random node
//! neighborhoods and random shortest paths. Their samples may be disconnected.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{
    nodes_in_large_components, InducedGrowth, RawSample, SampleContext, SampleError, SamplerKind,
};
use crate::graph::{EdgeSet, NodeId, NodePair};

pub(super) fn sample_node_jump<R: Rng + ?Sized>(
    ctx: &SampleContext<'_>,
    rng: &mut R,
) -> Result<RawSample, SampleError> {
    match ctx.spec.kind {
        SamplerKind::LoopErasedRandomWalk => loop_erased(ctx, rng),
        SamplerKind::RandomWalkWithJump => walk_with_jump(ctx, rng),
        SamplerKind::RandomNodeNeighbor => node_neighbor(ctx, rng),
        SamplerKind::ShortestPath => shortest_paths(ctx, rng),
        other => unreachable!("{other} is not node-jump-based"),
    }
}

/// Grows a uniform spanning tree of one component with Wilson's algorithm,
/// adding each loop-erased branch edge by edge from the tree side.
fn loop_erased<R: Rng + ?Sized>(
    ctx: &SampleContext<'_>,
    rng: &mut R,
) -> Result<RawSample, SampleError> {
    let g = ctx.g;
    let roots = nodes_in_large_components(g, 0, ctx.target + 1);
    if roots.is_empty() {
        return Err(ctx.infeasible("target exceeds every spanning tree"));
    }
    let root = roots[rng.random_range(0..roots.len())];
    let component: Vec<NodeId> = g
        .connected_components()
        .into_iter()
        .find(|c| c.contains(&root))
        .expect("root belongs to a component");
    let n = g.node_count();
    let mut in_tree = vec![false; n];
    let mut next = vec![usize::MAX; n];
    in_tree[root] = true;
    let mut touched = vec![root];
    let mut retained = EdgeSet::new();
    let mut pending: Vec<NodeId> = component.iter().copied().filter(|&v| v != root).collect();
    pending.shuffle(rng);
    let budget = ctx.step_budget();
    let mut steps = 0u64;
    while retained.len() < ctx.target {
        let Some(start) = pending.pop() else {
            break;
        };
        if in_tree[start] {
            continue;
        }
        let mut u = start;
        while !in_tree[u] {
            let nbrs = g.neighbors(u);
            next[u] = nbrs[rng.random_range(0..nbrs.len())];
            u = next[u];
            steps += 1;
            if steps > budget {
                return Err(ctx.infeasible("walk step budget exhausted"));
            }
        }
        let mut branch = vec![start];
        let mut u = start;
        while !in_tree[u] {
            u = next[u];
            branch.push(u);
        }
        for pair in branch.windows(2).rev() {
            if retained.len() == ctx.target {
                break;
            }
            let (child, parent) = (pair[0], pair[1]);
            retained.insert(NodePair::new(child, parent));
            in_tree[child] = true;
            touched.push(child);
        }
    }
    Ok(RawSample {
        retained,
        touched,
        boundary: None,
    })
}

fn walk_with_jump<R: Rng + ?Sized>(
    ctx: &SampleContext<'_>,
    rng: &mut R,
) -> Result<RawSample, SampleError> {
    let g = ctx.g;
    let n = g.node_count();
    let jump = ctx.spec.params.jump;
    let mut grow = InducedGrowth::new(g, ctx.target);
    let mut current = rng.random_range(0..n);
    if !grow.add(current) {
        let mut done = false;
        for _ in 0..ctx.step_budget() {
            let nbrs = g.neighbors(current);
            current = if nbrs.is_empty() || rng.random_bool(jump) {
                rng.random_range(0..n)
            } else {
                nbrs[rng.random_range(0..nbrs.len())]
            };
            if grow.add(current) {
                done = true;
                break;
            }
        }
        if !done {
            return Err(ctx.infeasible("walk step budget exhausted"));
        }
    }
    Ok(grow.finish(rng))
}

/// Draws nodes uniformly without replacement and adds each one together with
/// its whole neighborhood.
fn node_neighbor<R: Rng + ?Sized>(
    ctx: &SampleContext<'_>,
    rng: &mut R,
) -> Result<RawSample, SampleError> {
    let g = ctx.g;
    let mut order: Vec<NodeId> = (0..g.node_count()).collect();
    order.shuffle(rng);
    let mut grow = InducedGrowth::new(g, ctx.target);
    'outer: for v in order {
        if grow.add(v) {
            break;
        }
        for &w in g.neighbors(v) {
            if grow.add(w) {
                break 'outer;
            }
        }
    }
    Ok(grow.finish(rng))
}

/// Adds the edges of random shortest paths between uniform node pairs until
/// the target is met.
fn shortest_paths<R: Rng + ?Sized>(
    ctx: &SampleContext<'_>,
    rng: &mut R,
) -> Result<RawSample, SampleError> {
    let g = ctx.g;
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut touched = Vec::new();
    let mut retained = EdgeSet::new();
    let mut draws = 0u64;
    while retained.len() < ctx.target {
        draws += 1;
        if draws > ctx.step_budget() {
            return Err(ctx.infeasible("pair draw budget exhausted"));
        }
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b {
            continue;
        }
        let Some(path) = g.random_shortest_path(a, b, rng) else {
            continue;
        };
        for pair in path.windows(2) {
            if retained.len() == ctx.target {
                break;
            }
            if retained.insert(NodePair::new(pair[0], pair[1])) {
                for x in [pair[0], pair[1]] {
                    if !seen[x] {
                        seen[x] = true;
                        touched.push(x);
                    }
                }
            }
        }
    }
    Ok(RawSample {
        retained,
        touched,
        boundary: None,
    })
}
