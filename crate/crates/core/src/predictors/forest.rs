//! Random forest of Gini CART trees over histogram-binned features.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use super::logistic::Design;
use super::PredictError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    /// Candidate forest sizes; validation picks one.
    pub tree_grid: Vec<usize>,
    pub max_depth: usize,
    pub max_bins: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            tree_grid: vec![50, 100, 200],
            max_depth: 10,
            max_bins: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Weighted positive share of the leaf reached by `x`.
    pub fn leaf_value(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(p) => return p,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Positive vote (1), tie (0.5) or negative vote (0).
    pub fn vote(&self, x: &[f64]) -> f64 {
        let p = self.leaf_value(x);
        if p > 0.5 {
            1.0
        } else if p == 0.5 {
            0.5
        } else {
            0.0
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Forest {
    trees: Vec<Tree>,
}

/// Per-feature bin edges: a value `x` falls in the first bin whose upper
/// edge is `>= x`.
struct Bins {
    edges: Vec<Vec<f64>>,
    lo: Vec<Vec<f64>>,
    hi: Vec<Vec<f64>>,
    codes: Vec<u16>,
}

impl Bins {
    fn new(design: &Design, max_bins: usize) -> Self {
        let d = design.dims;
        let n = design.len();
        let mut edges = Vec::with_capacity(d);
        for j in 0..d {
            let mut vals: Vec<(f64, f64)> = (0..n).map(|i| (design.row(i)[j], design.weights[i])).collect();
            vals.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut distinct: Vec<(f64, f64)> = Vec::new();
            for (x, w) in vals {
                match distinct.last_mut() {
                    Some(last) if last.0 == x => last.1 += w,
                    _ => distinct.push((x, w)),
                }
            }
            let e: Vec<f64> = if distinct.len() <= max_bins {
                distinct.iter().map(|x| x.0).collect()
            } else {
                let total: f64 = distinct.iter().map(|x| x.1).sum();
                let mut e = Vec::with_capacity(max_bins);
                let mut acc = 0.0;
                let mut next = 1;
                for &(x, w) in &distinct {
                    acc += w;
                    if acc >= total * next as f64 / max_bins as f64 {
                        e.push(x);
                        while next < max_bins && acc >= total * next as f64 / max_bins as f64 {
                            next += 1;
                        }
                    }
                }
                if e.last() != distinct.last().map(|x| &x.0) {
                    e.push(distinct.last().unwrap().0);
                }
                e
            };
            edges.push(e);
        }
        let mut codes = vec![0u16; n * d];
        let mut lo: Vec<Vec<f64>> = edges.iter().map(|e| vec![f64::INFINITY; e.len()]).collect();
        let mut hi: Vec<Vec<f64>> = edges.iter().map(|e| vec![f64::NEG_INFINITY; e.len()]).collect();
        for i in 0..n {
            for j in 0..d {
                let x = design.row(i)[j];
                let b = edges[j].partition_point(|&t| t < x);
                codes[i * d + j] = b as u16;
                lo[j][b] = lo[j][b].min(x);
                hi[j][b] = hi[j][b].max(x);
            }
        }
        Self { edges, lo, hi, codes }
    }
}

struct Grower<'a> {
    design: &'a Design,
    bins: &'a Bins,
    mtry: usize,
    max_depth: usize,
}

impl Grower<'_> {
    fn grow(&self, rows: Vec<(usize, f64)>, depth: usize, rng: &mut ChaCha8Rng, nodes: &mut Vec<Node>) -> usize {
        let id = nodes.len();
        nodes.push(Node::Leaf(0.0));
        let total: f64 = rows.iter().map(|r| r.1).sum();
        let pos: f64 = rows.iter().filter(|r| self.design.labels[r.0]).map(|r| r.1).sum();
        let share = if total > 0.0 { pos / total } else { 0.0 };
        if depth >= self.max_depth || pos <= 0.0 || pos >= total {
            nodes[id] = Node::Leaf(share);
            return id;
        }
        let d = self.design.dims;
        let parent = 2.0 * pos * (total - pos) / total;
        let mut best: Option<(f64, usize, usize, f64)> = None;
        for j in index::sample(rng, d, self.mtry.min(d)).iter() {
            let nb = self.bins.edges[j].len();
            let mut w = vec![0.0; nb];
            let mut p = vec![0.0; nb];
            for &(i, wi) in &rows {
                let b = self.bins.codes[i * d + j] as usize;
                w[b] += wi;
                if self.design.labels[i] {
                    p[b] += wi;
                }
            }
            let occupied: Vec<usize> = (0..nb).filter(|&b| w[b] > 0.0).collect();
            let (mut lw, mut lp) = (0.0, 0.0);
            for k in 0..occupied.len().saturating_sub(1) {
                let b = occupied[k];
                lw += w[b];
                lp += p[b];
                let (rw, rp) = (total - lw, pos - lp);
                let impurity = 2.0 * lp * (lw - lp) / lw + 2.0 * rp * (rw - rp) / rw;
                let gain = parent - impurity;
                if gain > 1e-12 && best.is_none_or(|(g, ..)| gain > g + 1e-12) {
                    let threshold = 0.5 * (self.bins.hi[j][b] + self.bins.lo[j][occupied[k + 1]]);
                    best = Some((gain, j, b, threshold));
                }
            }
        }
        let Some((_, feature, bin, threshold)) = best else {
            nodes[id] = Node::Leaf(share);
            return id;
        };
        let (left_rows, right_rows): (Vec<_>, Vec<_>) =
            rows.into_iter().partition(|&(i, _)| self.bins.codes[i * d + feature] as usize <= bin);
        let left = self.grow(left_rows, depth + 1, rng, nodes);
        let right = self.grow(right_rows, depth + 1, rng, nodes);
        nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

impl Forest {
    /// Trains `trees` trees, each on a weighted bootstrap of the rows (total
    /// draw count equal to the rounded weight sum) with `ceil(sqrt(d))`
    /// candidate features per split.
    pub fn fit(design: &Design, trees: usize, max_depth: usize, max_bins: usize, seed: u64) -> Result<Self, PredictError> {
        if !design.has_both_classes() {
            return Err(PredictError::SingleClass);
        }
        let bins = Bins::new(design, max_bins.clamp(2, u16::MAX as usize));
        let grower = Grower {
            design,
            bins: &bins,
            mtry: (design.dims as f64).sqrt().ceil() as usize,
            max_depth,
        };
        let alias = WeightedAliasIndex::new(design.weights.clone())
            .map_err(|e| PredictError::Config(format!("forest weights: {e}")))?;
        let draws = design.weights.iter().sum::<f64>().round().max(1.0) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(trees);
        let mut counts = vec![0u32; design.len()];
        for _ in 0..trees {
            counts.iter_mut().for_each(|c| *c = 0);
            for _ in 0..draws {
                counts[alias.sample(&mut rng)] += 1;
            }
            let rows: Vec<(usize, f64)> = counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(i, &c)| (i, c as f64))
                .collect();
            let mut nodes = Vec::new();
            grower.grow(rows, 0, &mut rng, &mut nodes);
            out.push(Tree { nodes });
        }
        Ok(Self { trees: out })
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Share of the first `k` trees voting positive.
    pub fn score_prefix(&self, x: &[f64], k: usize) -> f64 {
        let k = k.min(self.trees.len()).max(1);
        self.trees[..k].iter().map(|t| t.vote(x)).sum::<f64>() / k as f64
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.score_prefix(x, self.trees.len())
    }

    /// Keeps only the first `k` trees.
    pub fn truncate(&mut self, k: usize) {
        self.trees.truncate(k.max(1));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalpipe::auc;

    #[test]
    fn one_stump_separates_a_clean_feature() {
        let mut design = Design::new(1);
        for i in 0..20 {
            let x = if i < 10 { i } else { i + 10 };
            design.push(&[x as f64], i >= 10, 1.0);
        }
        for seed in 0..20 {
            let forest = Forest::fit(&design, 1, 1, 64, seed).unwrap();
            assert_eq!(forest.trees()[0].depth(), 1);
            let scores: Vec<f64> = (0..20).map(|i| forest.score(design.row(i))).collect();
            assert_eq!(auc(&scores, &design.labels).unwrap(), 1.0);
        }
    }

    #[test]
    fn deterministic_and_bounded() {
        let mut design = Design::new(2);
        for i in 0..60 {
            let x = [(i % 7) as f64, (i % 5) as f64];
            design.push(&x, (i % 7) + (i % 5) > 5, 1.0 + (i % 3) as f64);
        }
        let a = Forest::fit(&design, 20, 4, 64, 9).unwrap();
        let b = Forest::fit(&design, 20, 4, 64, 9).unwrap();
        assert_eq!(a, b);
        for i in 0..design.len() {
            let s = a.score(design.row(i));
            assert!((0.0..=1.0).contains(&s));
        }
        assert!(a.trees().iter().all(|t| t.depth() <= 4));
    }

    #[test]
    fn copied_training_set_gives_identical_forest() {
        let mut original = Design::new(1);
        for i in 0..10 {
            original.push(&[i as f64], i > 4, 2.0);
        }
        let copy = original.clone();
        assert_eq!(Forest::fit(&original, 5, 3, 64, 1).unwrap(), Forest::fit(&copy, 5, 3, 64, 1).unwrap());
    }
}
