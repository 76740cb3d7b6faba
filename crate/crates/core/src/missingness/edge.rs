//! Edge-based samplers: random edge, random node-edge, hybrid, induction.

use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::{weighted_order, RawSample, SampleContext, SampleError};
use crate::graph::{EdgeSet, NodeId, NodePair};
use crate::missingness::SamplerKind;

pub(super) fn sample_edge_based<R: Rng + ?Sized>(
    ctx: &SampleContext<'_>,
    rng: &mut R,
) -> Result<RawSample, SampleError> {
    let edges: Vec<NodePair> = ctx.g.edges().collect();
    let picked: Vec<NodePair> = match ctx.spec.kind {
        SamplerKind::RandomEdge => index::sample(rng, edges.len(), ctx.target)
            .iter()
            .map(|i| edges[i])
            .collect(),
        SamplerKind::RandomNodeEdge => {
            let w = node_edge_weights(ctx, &edges);
            first_k(&edges, &weighted_order(&w, rng), ctx.target)
        }
        SamplerKind::HybridNodeEdge => {
            let mix = ctx.spec.params.hybrid_mix;
            let m = edges.len() as f64;
            let w: Vec<f64> = node_edge_weights(ctx, &edges)
                .into_iter()
                .map(|x| mix / m + (1.0 - mix) * x)
                .collect();
            first_k(&edges, &weighted_order(&w, rng), ctx.target)
        }
        SamplerKind::RandomEdgeWithInduction => return induction(ctx, &edges, rng),
        other => unreachable!("{other} is not edge-based"),
    };
    Ok(RawSample {
        touched: endpoints_in_order(ctx.g.node_count(), &picked),
        retained: picked.into_iter().collect(),
        boundary: None,
    })
}

/// Per-round probability of each edge when a round draws a uniform
/// non-isolated node and then one of its edges uniformly.
fn node_edge_weights(ctx: &SampleContext<'_>, edges: &[NodePair]) -> Vec<f64> {
    let active = (0..ctx.g.node_count()).filter(|&v| ctx.g.deg(v) > 0).count() as f64;
    edges
        .iter()
        .map(|p| (1.0 / ctx.g.deg(p.u()) as f64 + 1.0 / ctx.g.deg(p.v()) as f64) / active)
        .collect()
}

fn first_k(edges: &[NodePair], order: &[usize], k: usize) -> Vec<NodePair> {
    order[..k].iter().map(|&i| edges[i]).collect()
}

fn endpoints_in_order(n: usize, picked: &[NodePair]) -> Vec<NodeId> {
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for p in picked {
        for x in [p.u(), p.v()] {
            if !seen[x] {
                seen[x] = true;
                out.push(x);
            }
        }
    }
    out
}

/// Edges stream in random order and each is accepted with the keep
/// probability, adding its endpoints to the node set. Once the node set
/// induces the target, the accepted edges are padded with edges drawn
/// uniformly from the remaining induced ones.
fn induction<R: Rng + ?Sized>(
    ctx: &SampleContext<'_>,
    edges: &[NodePair],
    rng: &mut R,
) -> Result<RawSample, SampleError> {
    let g = ctx.g;
    let keep = ctx.spec.params.induction_keep;
    let mut member = vec![false; g.node_count()];
    let mut touched = Vec::new();
    let mut accepted = EdgeSet::new();
    let mut induced = 0usize;
    let mut order: Vec<usize> = (0..edges.len()).collect();
    'outer: while induced < ctx.target {
        order.shuffle(rng);
        for &i in &order {
            if induced >= ctx.target {
                break 'outer;
            }
            let e = edges[i];
            if accepted.contains(&e) || !rng.random_bool(keep) {
                continue;
            }
            accepted.insert(e);
            for x in [e.u(), e.v()] {
                if !member[x] {
                    member[x] = true;
                    touched.push(x);
                    induced += g.neighbors(x).iter().filter(|&&w| member[w]).count();
                }
            }
        }
    }
    let rest: Vec<NodePair> = g
        .induced_edges_by_mask(&member)
        .iter()
        .filter(|p| !accepted.contains(p))
        .copied()
        .collect();
    let need = ctx.target - accepted.len();
    let mut retained = accepted;
    for i in index::sample(rng, rest.len(), need).iter() {
        retained.insert(rest[i]);
    }
    Ok(RawSample {
        retained,
        touched,
        boundary: None,
    })
}
