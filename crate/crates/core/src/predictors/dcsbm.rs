//! Degree-corrected stochastic block model fitted by minimizing its
//! description length (in nats).
//!
//! The description length of a partition `b` into `B` nonempty blocks is
//!
//! ```text
//! DL = -E - sum_v ln k_v! - 1/2 sum_rs e_rs ln(e_rs / (e_r e_s))
//!      + E h(B(B+1) / 2E) + N ln B + ln N
//!      + sum_r [ n_r ln n_r - sum_k c_rk ln c_rk ]
//! ```
//!
//! with `h(x) = (1+x) ln(1+x) - x ln x`, `e_rs` the edge-end counts between
//! blocks (`e_rr` counts internal edges twice), `e_r = sum_s e_rs`, and
//! `c_rk` the number of degree-`k` nodes in block `r`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::modularity::relabel;
use crate::graph::{Graph, NodeId, NodePair};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DcsbmConfig {
    pub restarts: usize,
    /// Merge candidates evaluated per block and round.
    pub merge_candidates: usize,
    /// Upper bound on node-move sweeps after each merge round.
    pub sweeps: usize,
    /// Each merge round shrinks the block count by this factor (at least one merge).
    pub shrink: f64,
}

impl Default for DcsbmConfig {
    fn default() -> Self {
        Self {
            restarts: 3,
            merge_candidates: 10,
            sweeps: 10,
            shrink: 1.3,
        }
    }
}

fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// `h(x) = (1+x) ln(1+x) - x ln x`.
pub fn h(x: f64) -> f64 {
    xlnx(1.0 + x) - xlnx(x)
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

#[derive(Clone, Debug)]
struct State<'g> {
    g: &'g Graph,
    block: Vec<usize>,
    ers: Vec<BTreeMap<usize, u64>>,
    er: Vec<u64>,
    nr: Vec<u64>,
    degrees: Vec<BTreeMap<usize, u64>>,
    blocks: usize,
    constant: f64,
}

impl<'g> State<'g> {
    fn singletons(g: &'g Graph) -> Self {
        let n = g.node_count();
        let mut state = State {
            g,
            block: (0..n).collect(),
            ers: vec![BTreeMap::new(); n],
            er: vec![0; n],
            nr: vec![1; n],
            degrees: (0..n).map(|v| BTreeMap::from([(g.deg(v), 1)])).collect(),
            blocks: n,
            constant: -(g.edge_count() as f64) - (0..n).map(|v| ln_factorial(g.deg(v))).sum::<f64>(),
        };
        for p in g.edges() {
            *state.ers[p.u()].entry(p.v()).or_insert(0) += 1;
            *state.ers[p.v()].entry(p.u()).or_insert(0) += 1;
            state.er[p.u()] += 1;
            state.er[p.v()] += 1;
        }
        state
    }

    fn from_membership(g: &'g Graph, membership: &[usize]) -> Self {
        let n = g.node_count();
        let mut state = Self::singletons(g);
        state.block = membership.to_vec();
        state.ers = vec![BTreeMap::new(); n];
        state.er = vec![0; n];
        state.nr = vec![0; n];
        state.degrees = vec![BTreeMap::new(); n];
        for v in 0..n {
            let b = membership[v];
            state.nr[b] += 1;
            *state.degrees[b].entry(g.deg(v)).or_insert(0) += 1;
            state.er[b] += g.deg(v) as u64;
        }
        for p in g.edges() {
            let (r, s) = (membership[p.u()], membership[p.v()]);
            *state.ers[r].entry(s).or_insert(0) += 1;
            *state.ers[s].entry(r).or_insert(0) += 1;
        }
        state.blocks = state.nr.iter().filter(|&&c| c > 0).count();
        state
    }

    fn e(&self, r: usize, s: usize) -> f64 {
        self.ers[r].get(&s).copied().unwrap_or(0) as f64
    }

    fn model_term(&self, blocks: usize) -> f64 {
        let e = self.g.edge_count() as f64;
        let n = self.g.node_count() as f64;
        let b = blocks as f64;
        e * h(b * (b + 1.0) / (2.0 * e)) + n * b.ln() + n.ln()
    }

    fn description_length(&self) -> f64 {
        let mut partition = 0.0;
        for (r, row) in self.ers.iter().enumerate() {
            for &ers in row.values() {
                partition -= 0.5 * xlnx(ers as f64);
            }
            partition += xlnx(self.er[r] as f64);
        }
        let mut degree = 0.0;
        for r in 0..self.nr.len() {
            degree += xlnx(self.nr[r] as f64);
            for &c in self.degrees[r].values() {
                degree -= xlnx(c as f64);
            }
        }
        self.constant + partition + self.model_term(self.blocks) + degree
    }

    fn count(&self, r: usize, k: usize) -> f64 {
        self.degrees[r].get(&k).copied().unwrap_or(0) as f64
    }

    fn neighbor_blocks(&self, v: NodeId) -> BTreeMap<usize, u64> {
        let mut kt = BTreeMap::new();
        for &w in self.g.neighbors(v) {
            *kt.entry(self.block[w]).or_insert(0u64) += 1;
        }
        kt
    }

    fn move_delta(&self, v: NodeId, s: usize) -> f64 {
        let r = self.block[v];
        if r == s {
            return 0.0;
        }
        let kv = self.g.deg(v) as f64;
        let kt = self.neighbor_blocks(v);
        let kr = kt.get(&r).copied().unwrap_or(0) as f64;
        let ks = kt.get(&s).copied().unwrap_or(0) as f64;
        let mut delta = 0.0;
        for (&t, &k) in &kt {
            if t == r || t == s {
                continue;
            }
            let k = k as f64;
            let (ert, est) = (self.e(r, t), self.e(s, t));
            delta -= xlnx(ert - k) - xlnx(ert) + xlnx(est + k) - xlnx(est);
        }
        let (err, ess, ers) = (self.e(r, r), self.e(s, s), self.e(r, s));
        delta -= 0.5 * (xlnx(err - 2.0 * kr) - xlnx(err) + xlnx(ess + 2.0 * ks) - xlnx(ess));
        delta -= xlnx(ers - ks + kr) - xlnx(ers);
        let (er, es) = (self.er[r] as f64, self.er[s] as f64);
        delta += xlnx(er - kv) - xlnx(er) + xlnx(es + kv) - xlnx(es);

        let mut blocks = self.blocks;
        if self.nr[r] == 1 {
            blocks -= 1;
        }
        if self.nr[s] == 0 {
            blocks += 1;
        }
        delta += self.model_term(blocks) - self.model_term(self.blocks);

        let (nr, ns) = (self.nr[r] as f64, self.nr[s] as f64);
        delta += xlnx(nr - 1.0) - xlnx(nr) + xlnx(ns + 1.0) - xlnx(ns);
        let k = self.g.deg(v);
        let (crk, csk) = (self.count(r, k), self.count(s, k));
        delta -= xlnx(crk - 1.0) - xlnx(crk) + xlnx(csk + 1.0) - xlnx(csk);
        delta
    }

    fn apply_move(&mut self, v: NodeId, s: usize) {
        let r = self.block[v];
        if r == s {
            return;
        }
        let kt = self.neighbor_blocks(v);
        for (&t, &k) in &kt {
            // the end at v moves from (r, t) to (s, t), the far end from (t, r) to (t, s)
            let k = k as i64;
            self.add_entry(r, t, -k);
            self.add_entry(s, t, k);
            self.add_entry(t, r, -k);
            self.add_entry(t, s, k);
        }
        let kv = self.g.deg(v) as u64;
        self.er[r] -= kv;
        self.er[s] += kv;
        if self.nr[r] == 1 {
            self.blocks -= 1;
        }
        if self.nr[s] == 0 {
            self.blocks += 1;
        }
        self.nr[r] -= 1;
        self.nr[s] += 1;
        let k = self.g.deg(v);
        decrement(&mut self.degrees[r], k);
        *self.degrees[s].entry(k).or_insert(0) += 1;
        self.block[v] = s;
    }

    fn add_entry(&mut self, r: usize, t: usize, delta: i64) {
        let entry = self.ers[r].entry(t).or_insert(0);
        *entry = (*entry as i64 + delta) as u64;
        if *entry == 0 {
            self.ers[r].remove(&t);
        }
    }

    fn merge_delta(&self, r: usize, s: usize) -> f64 {
        let mut delta = 0.0;
        let mut touched: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
        for (&t, &c) in &self.ers[r] {
            touched.entry(t).or_default().0 = c as f64;
        }
        for (&t, &c) in &self.ers[s] {
            touched.entry(t).or_default().1 = c as f64;
        }
        for (&t, &(ert, est)) in &touched {
            if t == r || t == s {
                continue;
            }
            delta -= xlnx(ert + est) - xlnx(ert) - xlnx(est);
        }
        let (err, ess, ers) = (self.e(r, r), self.e(s, s), self.e(r, s));
        delta -= 0.5 * (xlnx(err + ess + 2.0 * ers) - xlnx(err) - xlnx(ess) - 2.0 * xlnx(ers));
        let (er, es) = (self.er[r] as f64, self.er[s] as f64);
        delta += xlnx(er + es) - xlnx(er) - xlnx(es);
        delta += self.model_term(self.blocks - 1) - self.model_term(self.blocks);
        let (nr, ns) = (self.nr[r] as f64, self.nr[s] as f64);
        delta += xlnx(nr + ns) - xlnx(nr) - xlnx(ns);
        for (&k, &c) in &self.degrees[r] {
            let (c, d) = (c as f64, self.count(s, k));
            delta -= xlnx(c + d) - xlnx(c) - xlnx(d);
        }
        delta
    }

    fn apply_merge(&mut self, r: usize, s: usize, members: &mut [Vec<NodeId>]) {
        let moved = std::mem::take(&mut members[r]);
        for &v in &moved {
            self.apply_move(v, s);
        }
        members[s].extend(moved);
    }

    fn nonempty(&self) -> Vec<usize> {
        (0..self.nr.len()).filter(|&r| self.nr[r] > 0).collect()
    }
}

fn decrement(map: &mut BTreeMap<usize, u64>, k: usize) {
    let c = map.get_mut(&k).expect("degree present in its block");
    *c -= 1;
    if *c == 0 {
        map.remove(&k);
    }
}

/// Description length of `membership` on `g`.
pub fn description_length(g: &Graph, membership: &[usize]) -> f64 {
    State::from_membership(g, membership).description_length()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DcsbmFit {
    pub membership: Vec<usize>,
    pub description_length: f64,
    /// Description length after every accepted node move, per move phase.
    pub move_trace: Vec<Vec<f64>>,
    block_edges: Vec<BTreeMap<usize, u64>>,
    block_ends: Vec<u64>,
    degree: Vec<f64>,
}

impl DcsbmFit {
    pub fn block_count(&self) -> usize {
        self.block_ends.len()
    }

    /// Degree-corrected expected-edge propensity `k_u k_v e_rs / (e_r e_s)`.
    pub fn score(&self, p: NodePair) -> f64 {
        let (r, s) = (self.membership[p.u()], self.membership[p.v()]);
        let denom = self.block_ends[r] as f64 * self.block_ends[s] as f64;
        if denom == 0.0 {
            return 0.0;
        }
        let ers = self.block_edges[r].get(&s).copied().unwrap_or(0) as f64;
        self.degree[p.u()] * self.degree[p.v()] * ers / denom
    }
}

/// Agglomerative merges from one block per node down to a single block,
/// each round followed by greedy node moves that only lower the description
/// length; the best partition over all rounds and restarts wins.
pub fn fit_dcsbm(g: &Graph, cfg: &DcsbmConfig, seed: u64) -> DcsbmFit {
    let n = g.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut move_trace = Vec::new();
    if g.edge_count() > 0 {
        for _ in 0..cfg.restarts.max(1) {
            let mut state = State::singletons(g);
            let mut members: Vec<Vec<NodeId>> = (0..n).map(|v| vec![v]).collect();
            let consider = |state: &State<'_>, best: &mut Option<(f64, Vec<usize>)>| {
                let dl = state.description_length();
                if best.as_ref().is_none_or(|(b, _)| dl < *b - 1e-9) {
                    *best = Some((dl, state.block.clone()));
                }
            };
            consider(&state, &mut best);
            while state.blocks > 1 {
                merge_round(&mut state, &mut members, cfg, &mut rng);
                move_trace.push(move_phase(&mut state, &mut members, cfg, &mut rng));
                consider(&state, &mut best);
            }
        }
    }
    let membership = relabel(&best.map_or_else(|| vec![0; n], |(_, b)| b));
    let state = State::from_membership(g, &membership);
    let blocks = membership.iter().max().map_or(0, |b| b + 1);
    DcsbmFit {
        description_length: state.description_length(),
        block_edges: state.ers[..blocks].to_vec(),
        block_ends: state.er[..blocks].to_vec(),
        degree: (0..n).map(|v| g.deg(v) as f64).collect(),
        membership,
        move_trace,
    }
}

fn merge_round<R: Rng + ?Sized>(
    state: &mut State<'_>,
    members: &mut [Vec<NodeId>],
    cfg: &DcsbmConfig,
    rng: &mut R,
) {
    let mut blocks = state.nonempty();
    blocks.shuffle(rng);
    let mut proposals = Vec::with_capacity(blocks.len());
    for &r in &blocks {
        let mut candidates: Vec<usize> = state.ers[r].keys().copied().filter(|&s| s != r).collect();
        if candidates.len() > cfg.merge_candidates {
            candidates.shuffle(rng);
            candidates.truncate(cfg.merge_candidates);
        }
        let other = blocks[rng.random_range(0..blocks.len())];
        if other != r {
            candidates.push(other);
        }
        let best = candidates
            .into_iter()
            .map(|s| (state.merge_delta(r, s), s))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if let Some((delta, s)) = best {
            proposals.push((delta, r, s));
        }
    }
    proposals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let target = ((state.blocks as f64 / cfg.shrink).floor() as usize).min(state.blocks - 1);
    let merges = state.blocks - target;
    let mut used = vec![false; state.nr.len()];
    let mut done = 0;
    for (_, r, s) in proposals {
        if done == merges {
            break;
        }
        if used[r] || used[s] {
            continue;
        }
        used[r] = true;
        used[s] = true;
        state.apply_merge(r, s, members);
        done += 1;
    }
}

fn move_phase<R: Rng + ?Sized>(
    state: &mut State<'_>,
    members: &mut [Vec<NodeId>],
    cfg: &DcsbmConfig,
    rng: &mut R,
) -> Vec<f64> {
    let g = state.g;
    let mut order: Vec<NodeId> = (0..g.node_count()).collect();
    let mut dl = state.description_length();
    let mut trace = vec![dl];
    for _ in 0..cfg.sweeps {
        order.shuffle(rng);
        let mut moved = false;
        for &v in &order {
            let nbrs = g.neighbors(v);
            if nbrs.is_empty() {
                continue;
            }
            let s = state.block[nbrs[rng.random_range(0..nbrs.len())]];
            let r = state.block[v];
            if s == r {
                continue;
            }
            let delta = state.move_delta(v, s);
            if delta < -1e-10 {
                state.apply_move(v, s);
                let pos = members[r].iter().position(|&x| x == v).expect("member listed");
                members[r].swap_remove(pos);
                members[s].push(v);
                dl += delta;
                trace.push(dl);
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    trace
}
