//! Neighbor-based samplers. All of them expand from one start node and stay
//! inside its component, so their samples are connected.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Geometric};

use super::{
    nodes_in_large_components, InducedGrowth, RawSample, SampleContext, SampleError, SamplerKind,
};
use crate::graph::{Graph, NodeId};

pub(super) fn sample_neighbor_based<R: Rng + ?Sized>(
    ctx: &SampleContext<'_>,
    rng: &mut R,
) -> Result<RawSample, SampleError> {
    let candidates = nodes_in_large_components(ctx.g, ctx.target, 1);
    if candidates.is_empty() {
        return Err(ctx.infeasible("no component holds enough edges"));
    }
    let start = candidates[rng.random_range(0..candidates.len())];
    let mut grow = InducedGrowth::new(ctx.g, ctx.target);
    if !grow.add(start) {
        match ctx.spec.kind {
            SamplerKind::Diffusion => diffusion(ctx, &mut grow, start, rng),
            SamplerKind::ForestFire => forest_fire(ctx, &mut grow, start, rng)?,
            SamplerKind::BreadthFirstSearch => bfs(ctx, &mut grow, start, rng),
            SamplerKind::CirculatedNeighborsRandomWalk => cnrw(ctx, &mut grow, start, rng)?,
            _ => walk(ctx, &mut grow, start, rng)?,
        }
    }
    Ok(grow.finish(rng))
}

/// Each step adds the far end of a uniform (sampled, unsampled) incident pair.
fn diffusion<R: Rng + ?Sized>(
    ctx: &SampleContext<'_>,
    grow: &mut InducedGrowth<'_>,
    start: NodeId,
    rng: &mut R,
) {
    let g = ctx.g;
    let mut arcs: Vec<NodeId> = g.neighbors(start).to_vec();
    while !arcs.is_empty() {
        let i = rng.random_range(0..arcs.len());
        let w = arcs.swap_remove(i);
        if grow.contains(w) {
            continue;
        }
        if grow.add(w) {
            return;
        }
        arcs.extend(g.neighbors(w).iter().copied().filter(|&x| !grow.contains(x)));
    }
}

/// Burns a geometric number (mean p/(1-p)) of unburned neighbors of each
/// burning node. A fire that dies out reignites at a uniform burned node that
/// still has unburned neighbors.
fn forest_fire<R: Rng + ?Sized>(
    ctx: &SampleContext<'_>,
    grow: &mut InducedGrowth<'_>,
    start: NodeId,
    rng: &mut R,
) -> Result<(), SampleError> {
    let g = ctx.g;
    let burn = ctx.spec.params.burn;
    let spread = Geometric::new(1.0 - burn).map_err(|e| ctx.infeasible(e.to_string()))?;
    let mut queue = VecDeque::from([start]);
    let mut fresh = Vec::new();
    loop {
        while let Some(v) = queue.pop_front() {
            fresh.clear();
            fresh.extend(g.neighbors(v).iter().copied().filter(|&w| !grow.contains(w)));
            fresh.shuffle(rng);
            let count = (spread.sample(rng) as usize).min(fresh.len());
            for &w in &fresh[..count] {
                if grow.add(w) {
                    return Ok(());
                }
                queue.push_back(w);
            }
        }
        let open: Vec<NodeId> = grow
            .touched()
            .iter()
            .copied()
            .filter(|&v| g.neighbors(v).iter().any(|&w| !grow.contains(w)))
            .collect();
        if open.is_empty() {
            return Err(ctx.infeasible("fire exhausted its component"));
        }
        queue.push_back(open[rng.random_range(0..open.len())]);
    }
}

fn bfs<R: Rng + ?Sized>(
    ctx: &SampleContext<'_>,
    grow: &mut InducedGrowth<'_>,
    start: NodeId,
    rng: &mut R,
) {
    let g = ctx.g;
    let mut queued = vec![false; g.node_count()];
    queued[start] = true;
    let mut queue = VecDeque::from([start]);
    let mut fresh = Vec::new();
    while let Some(v) = queue.pop_front() {
        if grow.add(v) {
            return;
        }
        fresh.clear();
        fresh.extend(g.neighbors(v).iter().copied().filter(|&w| !queued[w]));
        fresh.shuffle(rng);
        for &w in &fresh {
            queued[w] = true;
            queue.push_back(w);
        }
    }
}

/// Simple, non-backtracking, restarting and Metropolis-Hastings walks.
fn walk<R: Rng + ?Sized>(
    ctx: &SampleContext<'_>,
    grow: &mut InducedGrowth<'_>,
    start: NodeId,
    rng: &mut R,
) -> Result<(), SampleError> {
    let g = ctx.g;
    let params = &ctx.spec.params;
    let mut mh = MetropolisWalker::new(g, start, params.mh_exponent);
    let mut current = start;
    let mut previous: Option<NodeId> = None;
    for _ in 0..ctx.step_budget() {
        let next = match ctx.spec.kind {
            SamplerKind::RandomWalk => uniform_neighbor(g, current, rng),
            SamplerKind::NonBacktrackingRandomWalk => {
                let nbrs = g.neighbors(current);
                match previous {
                    Some(p) if nbrs.len() > 1 => loop {
                        let w = nbrs[rng.random_range(0..nbrs.len())];
                        if w != p {
                            break w;
                        }
                    },
                    _ => uniform_neighbor(g, current, rng),
                }
            }
            SamplerKind::RandomWalkWithRestart => {
                if rng.random_bool(params.restart) {
                    start
                } else {
                    uniform_neighbor(g, current, rng)
                }
            }
            SamplerKind::MetropolisHastingsRandomWalk => mh.step(rng),
            other => unreachable!("{other} is not a plain walk"),
        };
        previous = Some(current);
        current = next;
        if grow.add(current) {
            return Ok(());
        }
    }
    Err(ctx.infeasible("walk step budget exhausted"))
}

/// Walk that leaves each node through its neighbors in a shuffled cycle,
/// reshuffling once every neighbor has been used.
fn cnrw<R: Rng + ?Sized>(
    ctx: &SampleContext<'_>,
    grow: &mut InducedGrowth<'_>,
    start: NodeId,
    rng: &mut R,
) -> Result<(), SampleError> {
    let g = ctx.g;
    let mut queues: Vec<Vec<NodeId>> = vec![Vec::new(); g.node_count()];
    let mut current = start;
    for _ in 0..ctx.step_budget() {
        let q = &mut queues[current];
        if q.is_empty() {
            q.extend_from_slice(g.neighbors(current));
            q.shuffle(rng);
        }
        current = q.pop().expect("walker sits in a component with edges");
        if grow.add(current) {
            return Ok(());
        }
    }
    Err(ctx.infeasible("walk step budget exhausted"))
}

fn uniform_neighbor<R: Rng + ?Sized>(g: &Graph, v: NodeId, rng: &mut R) -> NodeId {
    let nbrs = g.neighbors(v);
    nbrs[rng.random_range(0..nbrs.len())]
}

/// Metropolis-Hastings walker with a uniform target distribution when the
/// exponent is 1: a proposed move `u -> w` is accepted with probability
/// `min(1, (deg(u) / deg(w))^exponent)`.
#[derive(Clone, Debug)]
pub struct MetropolisWalker<'g> {
    g: &'g Graph,
    current: NodeId,
    exponent: f64,
}

impl<'g> MetropolisWalker<'g> {
    pub fn new(g: &'g Graph, start: NodeId, exponent: f64) -> Self {
        Self {
            g,
            current: start,
            exponent,
        }
    }

    pub fn current(&self) -> NodeId {
        self.current
    }

    /// Proposes a uniform neighbor and returns the (possibly unchanged)
    /// position.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> NodeId {
        let u = self.current;
        if self.g.deg(u) == 0 {
            return u;
        }
        let w = uniform_neighbor(self.g, u, rng);
        let ratio = (self.g.deg(u) as f64 / self.g.deg(w) as f64).powf(self.exponent);
        if ratio >= 1.0 || rng.random::<f64>() < ratio {
            self.current = w;
        }
        self.current
    }
}
