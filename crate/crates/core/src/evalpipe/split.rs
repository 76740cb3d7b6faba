//! Train/validation/test splits and balanced resampling.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::pools::NegativePools;
use super::EvalError;
use crate::graph::{Graph, NodePair};
use crate::missingness::SampleOutcome;
use crate::predictors::LabeledPairSet;

/// Positive and negative pairs of one fold.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitPlan {
    pub e_tr: Vec<NodePair>,
    pub e_val: Vec<NodePair>,
    /// Missing edges `E - E'`.
    pub y: Vec<NodePair>,
    pub neg_tr: Vec<NodePair>,
    pub neg_val: Vec<NodePair>,
    pub neg_test: Vec<NodePair>,
    pub repeat: usize,
    pub fold: usize,
    pub seed: u64,
}

/// Bounds of part `index` when `len` items are cut into `parts` nearly equal
/// contiguous parts, the larger ones first.
pub fn fold_bounds(len: usize, parts: usize, index: usize) -> (usize, usize) {
    let base = len / parts;
    let extra = len % parts;
    let start = index * base + index.min(extra);
    let size = base + usize::from(index < extra);
    (start, start + size)
}

fn rotate(items: &[NodePair], folds: usize, fold: usize) -> (Vec<NodePair>, Vec<NodePair>) {
    let (lo, hi) = fold_bounds(items.len(), folds, fold);
    let val = items[lo..hi].to_vec();
    let train = items[..lo].iter().chain(&items[hi..]).copied().collect();
    (train, val)
}

/// Cuts `E'` and the observed negatives into `folds` parts with one seeded
/// permutation per repeat; part `fold` becomes validation.
pub fn make_split(
    g: &Graph,
    outcome: &SampleOutcome,
    pools: &NegativePools,
    repeat: usize,
    fold: usize,
    folds: usize,
    seed: u64,
) -> Result<SplitPlan, EvalError> {
    if folds < 2 || fold >= folds {
        return Err(EvalError::Folds { fold, folds });
    }
    if outcome.retained.len() < folds {
        return Err(EvalError::TooFewEdges {
            have: outcome.retained.len(),
            folds,
        });
    }
    if pools.observed.len() < folds {
        return Err(EvalError::TooFewNegatives {
            have: pools.observed.len(),
            folds,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positives = outcome.retained.to_vec();
    positives.shuffle(&mut rng);
    let mut negatives = pools.observed.clone();
    negatives.shuffle(&mut rng);
    let (e_tr, e_val) = rotate(&positives, folds, fold);
    let (neg_tr, neg_val) = rotate(&negatives, folds, fold);
    let plan = SplitPlan {
        e_tr,
        e_val,
        y: outcome.missing(g),
        neg_tr,
        neg_val,
        neg_test: pools.held_out.clone(),
        repeat,
        fold,
        seed,
    };
    #[cfg(any(debug_assertions, test))]
    plan.check(g).expect("split invariants");
    Ok(plan)
}

impl SplitPlan {
    /// Verifies disjointness and that every negative is a true non-edge.
    pub fn check(&self, g: &Graph) -> Result<(), String> {
        use std::collections::BTreeSet;
        let tr: BTreeSet<_> = self.e_tr.iter().collect();
        let val: BTreeSet<_> = self.e_val.iter().collect();
        let y: BTreeSet<_> = self.y.iter().collect();
        if !tr.is_disjoint(&val) || !tr.is_disjoint(&y) || !val.is_disjoint(&y) {
            return Err("positive sets overlap".into());
        }
        if tr.len() + val.len() + y.len() != g.edge_count() || self.e_tr.iter().chain(&self.e_val).chain(&self.y).any(|p| !g.contains_pair(p)) {
            return Err("positives do not partition the edge set".into());
        }
        let ntr: BTreeSet<_> = self.neg_tr.iter().collect();
        let nval: BTreeSet<_> = self.neg_val.iter().collect();
        let ntest: BTreeSet<_> = self.neg_test.iter().collect();
        if !ntr.is_disjoint(&nval) || !ntr.is_disjoint(&ntest) || !nval.is_disjoint(&ntest) {
            return Err("negative sets overlap".into());
        }
        if self.neg_tr.iter().chain(&self.neg_val).chain(&self.neg_test).any(|p| g.contains_pair(p)) {
            return Err("a negative pair is an edge".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Train,
    Validation,
    Test,
}

impl Which {
    fn pool_names(self) -> (&'static str, &'static str) {
        match self {
            Which::Train => ("training positives", "training negatives"),
            Which::Validation => ("validation positives", "validation negatives"),
            Which::Test => ("test positives", "test negatives"),
        }
    }
}

/// `size` positives and `size` negatives drawn uniformly with replacement.
pub fn balance_resample(plan: &SplitPlan, which: Which, size: usize, seed: u64) -> Result<LabeledPairSet, EvalError> {
    let (pos, neg) = match which {
        Which::Train => (&plan.e_tr, &plan.neg_tr),
        Which::Validation => (&plan.e_val, &plan.neg_val),
        Which::Test => (&plan.y, &plan.neg_test),
    };
    let (pos_name, neg_name) = which.pool_names();
    if pos.is_empty() {
        return Err(EvalError::EmptyPool(pos_name));
    }
    if neg.is_empty() {
        return Err(EvalError::EmptyPool(neg_name));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = LabeledPairSet {
        pairs: Vec::with_capacity(2 * size),
        labels: Vec::with_capacity(2 * size),
    };
    for _ in 0..size {
        set.pairs.push(pos[rng.random_range(0..pos.len())]);
        set.labels.push(true);
    }
    for _ in 0..size {
        set.pairs.push(neg[rng.random_range(0..neg.len())]);
        set.labels.push(false);
    }
    Ok(set)
}
