//! Missingness functions: seeded graph samplers that decide which edges are
//! observed.
//!
//! Every sampler is a pure function of `(graph, spec, retention, seed)` and
//! returns exactly `round(retention * m)` edges. Node-driven samplers grow a
//! node set until its induced edge count first reaches the target; any
//! overshoot comes only from the marginal edges of the last node added, and
//! only those are trimmed, so the sample between the other touched nodes stays
//! fully induced and connected samplers stay connected.

mod edge;
mod jump;
mod neighbor;
mod node;

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EdgeSet, Graph, NodeId, NodePair};

pub use neighbor::MetropolisWalker;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SampleError {
    #[error("{sampler}: infeasible target of {target} edges ({reason})")]
    Infeasible {
        sampler: SamplerKind,
        target: usize,
        reason: String,
    },
    #[error("retention {0} outside (0, 1]")]
    BadRetention(f64),
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("{sampler}: parameter {name} = {value} outside (0, 1)")]
    BadParameter {
        sampler: SamplerKind,
        name: &'static str,
        value: f64,
    },
    #[error("unknown sampler {0:?}")]
    UnknownSampler(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    NodeBased,
    EdgeBased,
    Dfs,
    NeighborBased,
    NodeJumpBased,
}

impl Category {
    pub fn name(self) -> &'static str {
        match self {
            Category::NodeBased => "node-based",
            Category::EdgeBased => "edge-based",
            Category::Dfs => "dfs",
            Category::NeighborBased => "neighbor-based",
            Category::NodeJumpBased => "node-jump-based",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SamplerKind {
    RandomNode,
    DegreeBasedNode,
    PageRankBasedNode,
    RandomEdge,
    RandomNodeEdge,
    HybridNodeEdge,
    RandomEdgeWithInduction,
    DepthFirstSearch,
    Diffusion,
    ForestFire,
    NonBacktrackingRandomWalk,
    RandomWalk,
    RandomWalkWithRestart,
    MetropolisHastingsRandomWalk,
    CirculatedNeighborsRandomWalk,
    BreadthFirstSearch,
    LoopErasedRandomWalk,
    RandomWalkWithJump,
    RandomNodeNeighbor,
    ShortestPath,
}

impl SamplerKind {
    /// All samplers in table order (grouped by category).
    pub const ALL: [SamplerKind; 20] = [
        SamplerKind::RandomNode,
        SamplerKind::DegreeBasedNode,
        SamplerKind::PageRankBasedNode,
        SamplerKind::RandomEdge,
        SamplerKind::RandomNodeEdge,
        SamplerKind::HybridNodeEdge,
        SamplerKind::RandomEdgeWithInduction,
        SamplerKind::DepthFirstSearch,
        SamplerKind::Diffusion,
        SamplerKind::ForestFire,
        SamplerKind::NonBacktrackingRandomWalk,
        SamplerKind::RandomWalk,
        SamplerKind::RandomWalkWithRestart,
        SamplerKind::MetropolisHastingsRandomWalk,
        SamplerKind::CirculatedNeighborsRandomWalk,
        SamplerKind::BreadthFirstSearch,
        SamplerKind::LoopErasedRandomWalk,
        SamplerKind::RandomWalkWithJump,
        SamplerKind::RandomNodeNeighbor,
        SamplerKind::ShortestPath,
    ];

    pub fn name(self) -> &'static str {
        use SamplerKind::*;
        match self {
            RandomNode => "random-node",
            DegreeBasedNode => "degree-based-node",
            PageRankBasedNode => "pagerank-based-node",
            RandomEdge => "random-edge",
            RandomNodeEdge => "random-node-edge",
            HybridNodeEdge => "hybrid-node-edge",
            RandomEdgeWithInduction => "random-edge-with-induction",
            DepthFirstSearch => "depth-first-search",
            Diffusion => "diffusion",
            ForestFire => "forest-fire",
            NonBacktrackingRandomWalk => "non-backtracking-random-walk",
            RandomWalk => "random-walk",
            RandomWalkWithRestart => "random-walk-with-restart",
            MetropolisHastingsRandomWalk => "metropolis-hastings-random-walk",
            CirculatedNeighborsRandomWalk => "circulated-neighbors-random-walk",
            BreadthFirstSearch => "breadth-first-search",
            LoopErasedRandomWalk => "loop-erased-random-walk",
            RandomWalkWithJump => "random-walk-with-jump",
            RandomNodeNeighbor => "random-node-neighbor",
            ShortestPath => "shortest-path",
        }
    }

    pub fn category(self) -> Category {
        use SamplerKind::*;
        match self {
            RandomNode | DegreeBasedNode | PageRankBasedNode => Category::NodeBased,
            RandomEdge | RandomNodeEdge | HybridNodeEdge | RandomEdgeWithInduction => {
                Category::EdgeBased
            }
            DepthFirstSearch => Category::Dfs,
            Diffusion
            | ForestFire
            | NonBacktrackingRandomWalk
            | RandomWalk
            | RandomWalkWithRestart
            | MetropolisHastingsRandomWalk
            | CirculatedNeighborsRandomWalk
            | BreadthFirstSearch => Category::NeighborBased,
            LoopErasedRandomWalk | RandomWalkWithJump | RandomNodeNeighbor | ShortestPath => {
                Category::NodeJumpBased
            }
        }
    }

    /// Whether the retained set is the (trimmed) induced subgraph of the
    /// touched nodes. Edge-based samplers, loop-erased walks and shortest
    /// paths keep only the edges they traverse.
    pub fn is_induced(self) -> bool {
        !matches!(
            self.category(),
            Category::EdgeBased
        ) && !matches!(
            self,
            SamplerKind::LoopErasedRandomWalk | SamplerKind::ShortestPath
        )
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = SampleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SamplerKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| SampleError::UnknownSampler(s.to_string()))
    }
}

impl Serialize for SamplerKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for SamplerKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Tunable sampler parameters; each sampler reads only its own.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerParams {
    /// Share of hybrid rounds that draw a uniform edge.
    pub hybrid_mix: f64,
    /// Acceptance probability of a drawn edge before induction.
    pub induction_keep: f64,
    /// Forest-fire burning probability.
    pub burn: f64,
    pub restart: f64,
    pub jump: f64,
    /// Metropolis-Hastings rejection constraint exponent.
    pub mh_exponent: f64,
}

impl Default for SamplerParams {
    fn default() -> Self {
        Self {
            hybrid_mix: 0.5,
            induction_keep: 0.5,
            burn: 0.4,
            restart: 0.1,
            jump: 0.1,
            mh_exponent: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub kind: SamplerKind,
    pub params: SamplerParams,
}

impl SamplerSpec {
    pub fn new(kind: SamplerKind) -> Self {
        Self {
            kind,
            params: SamplerParams::default(),
        }
    }

    pub fn with_params(kind: SamplerKind, params: SamplerParams) -> Self {
        Self { kind, params }
    }

    pub fn validate(&self) -> Result<(), SampleError> {
        let p = &self.params;
        let check = |name: &'static str, value: f64, inclusive_one: bool| {
            let ok = value > 0.0 && (value < 1.0 || (inclusive_one && value == 1.0));
            if ok {
                Ok(())
            } else {
                Err(SampleError::BadParameter {
                    sampler: self.kind,
                    name,
                    value,
                })
            }
        };
        match self.kind {
            // a mix weight of 1 collapses to random-edge, which is a valid setting
            SamplerKind::HybridNodeEdge => check("hybrid_mix", p.hybrid_mix, true),
            SamplerKind::RandomEdgeWithInduction => check("induction_keep", p.induction_keep, true),
            SamplerKind::ForestFire => check("burn", p.burn, false),
            SamplerKind::RandomWalkWithRestart => check("restart", p.restart, false),
            SamplerKind::RandomWalkWithJump => check("jump", p.jump, false),
            SamplerKind::MetropolisHastingsRandomWalk => {
                if p.mh_exponent.is_finite() && p.mh_exponent >= 0.0 {
                    Ok(())
                } else {
                    Err(SampleError::BadParameter {
                        sampler: self.kind,
                        name: "mh_exponent",
                        value: p.mh_exponent,
                    })
                }
            }
            _ => Ok(()),
        }
    }
}

impl From<SamplerKind> for SamplerSpec {
    fn from(kind: SamplerKind) -> Self {
        SamplerSpec::new(kind)
    }
}

/// Result of one sampler draw.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleOutcome {
    /// Observed edges E'.
    pub retained: EdgeSet,
    /// Touched nodes in the order the sampler reached them.
    pub touched: Vec<NodeId>,
    /// Last node added when its marginal edges had to be trimmed.
    pub boundary: Option<NodeId>,
    pub spec: SamplerSpec,
    pub seed: u64,
    pub achieved_retention: f64,
}

impl SampleOutcome {
    pub fn touched_mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &v in &self.touched {
            mask[v] = true;
        }
        mask
    }

    /// Missing edges Y = E - E'.
    pub fn missing(&self, g: &Graph) -> Vec<NodePair> {
        g.edges().filter(|p| !self.retained.contains(p)).collect()
    }
}

/// Number of edges every sampler must retain.
pub fn target_edges(m: usize, retention: f64) -> usize {
    ((retention * m as f64).round() as usize).min(m)
}

/// Draws the observed edge set for `spec` at edge retention `retention`.
pub fn draw_sample(
    g: &Graph,
    spec: &SamplerSpec,
    retention: f64,
    seed: u64,
) -> Result<SampleOutcome, SampleError> {
    if !(retention > 0.0 && retention <= 1.0) {
        return Err(SampleError::BadRetention(retention));
    }
    if g.edge_count() == 0 {
        return Err(SampleError::EmptyGraph);
    }
    spec.validate()?;
    let target = target_edges(g.edge_count(), retention);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ctx = SampleContext {
        g,
        spec,
        target,
    };
    let raw = match spec.kind.category() {
        Category::EdgeBased => edge::sample_edge_based(&ctx, &mut rng)?,
        Category::NodeBased => node::sample_node_based(&ctx, &mut rng)?,
        Category::Dfs => node::sample_dfs(&ctx, &mut rng)?,
        Category::NeighborBased => neighbor::sample_neighbor_based(&ctx, &mut rng)?,
        Category::NodeJumpBased => jump::sample_node_jump(&ctx, &mut rng)?,
    };
    debug_assert_eq!(raw.retained.len(), target, "{} missed its target", spec.kind);
    Ok(SampleOutcome {
        achieved_retention: raw.retained.len() as f64 / g.edge_count() as f64,
        retained: raw.retained,
        touched: raw.touched,
        boundary: raw.boundary,
        spec: *spec,
        seed,
    })
}

pub(crate) struct SampleContext<'a> {
    pub g: &'a Graph,
    pub spec: &'a SamplerSpec,
    pub target: usize,
}

impl SampleContext<'_> {
    pub fn infeasible(&self, reason: impl Into<String>) -> SampleError {
        SampleError::Infeasible {
            sampler: self.spec.kind,
            target: self.target,
            reason: reason.into(),
        }
    }

    /// Walk budget shared by the walk-driven samplers.
    pub fn step_budget(&self) -> u64 {
        let n = self.g.node_count() as u64;
        let m = self.g.edge_count() as u64;
        20 * n * (m + 1) + 100_000
    }
}

pub(crate) struct RawSample {
    pub retained: EdgeSet,
    pub touched: Vec<NodeId>,
    pub boundary: Option<NodeId>,
}

/// Grows a node set while tracking its induced edges, in insertion order.
pub(crate) struct InducedGrowth<'g> {
    g: &'g Graph,
    member: Vec<bool>,
    touched: Vec<NodeId>,
    edges: Vec<NodePair>,
    last_start: usize,
    target: usize,
}

impl<'g> InducedGrowth<'g> {
    pub fn new(g: &'g Graph, target: usize) -> Self {
        Self {
            g,
            member: vec![false; g.node_count()],
            touched: Vec::new(),
            edges: Vec::new(),
            last_start: 0,
            target,
        }
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.member[v]
    }

    pub fn reached(&self) -> bool {
        self.edges.len() >= self.target
    }

    pub fn touched(&self) -> &[NodeId] {
        &self.touched
    }

    /// Adds `v` (no-op if present) and reports whether the target is reached.
    pub fn add(&mut self, v: NodeId) -> bool {
        if !self.member[v] {
            self.member[v] = true;
            self.touched.push(v);
            self.last_start = self.edges.len();
            for &w in self.g.neighbors(v) {
                if self.member[w] {
                    self.edges.push(NodePair::new(v, w));
                }
            }
        }
        self.reached()
    }

    /// Trims the last node's marginal edges down to the exact target.
    pub fn finish<R: Rng + ?Sized>(self, rng: &mut R) -> RawSample {
        let InducedGrowth {
            touched,
            mut edges,
            last_start,
            target,
            ..
        } = self;
        let mut boundary = None;
        if edges.len() > target {
            debug_assert!(last_start < target, "overshoot must come from the last node");
            let marginal = edges.split_off(last_start);
            let keep = target - last_start;
            let picks = index::sample(rng, marginal.len(), keep);
            edges.extend(picks.iter().map(|i| marginal[i]));
            boundary = touched.last().copied();
        }
        RawSample {
            retained: edges.into_iter().collect(),
            touched,
            boundary,
        }
    }
}

/// Order of indices under repeated weighted draws without replacement.
///
/// Drawing with replacement and discarding repeats yields the same sequence
/// distribution as successive sampling without replacement, so one key per
/// item (`ln U / w`) replaces the rejection loop. Zero-weight items follow
/// every positive one, in uniform random order.
pub(crate) fn weighted_order<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Vec<usize> {
    let mut keyed: Vec<(f64, f64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let u: f64 = 1.0 - rng.random::<f64>();
            let key = if w > 0.0 { u.ln() / w } else { f64::NEG_INFINITY };
            (key, u, i)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)).then(a.2.cmp(&b.2)));
    keyed.into_iter().map(|(_, _, i)| i).collect()
}

/// Nodes whose component holds at least `min_edges` edges and
/// `min_nodes` nodes, in id order.
pub(crate) fn nodes_in_large_components(g: &Graph, min_edges: usize, min_nodes: usize) -> Vec<NodeId> {
    let mut out = Vec::new();
    for comp in g.connected_components() {
        let edges: usize = comp.iter().map(|&v| g.deg(v)).sum::<usize>() / 2;
        if edges >= min_edges && comp.len() >= min_nodes {
            out.extend(comp);
        }
    }
    out.sort_unstable();
    out
}
