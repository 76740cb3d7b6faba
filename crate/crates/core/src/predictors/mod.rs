//! The nine link predictors: trainable score functions over node pairs of an
//! observed graph, where a higher score means a more likely missing link.

pub mod dcsbm;
pub mod features;
pub mod forest;
pub mod local;
pub mod logistic;
pub mod modularity;
pub mod skipgram;
pub mod spectral;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evalpipe::weighted_auc;
use crate::graph::{Graph, GraphError, NodePair};
use crate::linalg::LinalgError;

pub use dcsbm::{DcsbmConfig, DcsbmFit};
pub use features::{FeatureContext, FEATURE_DIMS, FEATURE_NAMES};
pub use forest::{Forest, ForestConfig};
pub use logistic::{Design, LogisticModel};
pub use modularity::BlockDensity;
pub use skipgram::{Embedding, SkipGramConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictError {
    #[error("observed graph has no edges")]
    NoEdges,
    #[error("training set holds a single class")]
    SingleClass,
    #[error("validation set holds a single class")]
    SingleClassValidation,
    #[error("invalid predictor configuration: {0}")]
    Config(String),
    #[error("non-finite values in {0}")]
    NonFinite(&'static str),
    #[error("{0}")]
    Graph(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("unknown predictor {0:?}")]
    UnknownPredictor(String),
}

impl From<GraphError> for PredictError {
    fn from(e: GraphError) -> Self {
        PredictError::Graph(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PredictorKind {
    AdamicAdar,
    Jaccard,
    PreferentialAttachment,
    N2vDot,
    N2vEdge,
    Spectral,
    Modularity,
    MdlDcsbm,
    TopStacking,
}

impl PredictorKind {
    pub const ALL: [PredictorKind; 9] = [
        PredictorKind::AdamicAdar,
        PredictorKind::Jaccard,
        PredictorKind::PreferentialAttachment,
        PredictorKind::N2vDot,
        PredictorKind::N2vEdge,
        PredictorKind::Spectral,
        PredictorKind::Modularity,
        PredictorKind::MdlDcsbm,
        PredictorKind::TopStacking,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PredictorKind::AdamicAdar => "adamic-adar",
            PredictorKind::Jaccard => "jaccard",
            PredictorKind::PreferentialAttachment => "preferential-attachment",
            PredictorKind::N2vDot => "n2v-dot",
            PredictorKind::N2vEdge => "n2v-edge",
            PredictorKind::Spectral => "spectral",
            PredictorKind::Modularity => "modularity",
            PredictorKind::MdlDcsbm => "mdl-dcsbm",
            PredictorKind::TopStacking => "top-stacking",
        }
    }

    pub fn family(self) -> &'static str {
        match self {
            PredictorKind::AdamicAdar | PredictorKind::Jaccard | PredictorKind::PreferentialAttachment => "local",
            PredictorKind::N2vDot | PredictorKind::N2vEdge | PredictorKind::Spectral => "embedding",
            PredictorKind::Modularity | PredictorKind::MdlDcsbm => "community",
            PredictorKind::TopStacking => "stacking",
        }
    }

    /// Whether the model consumes training or validation pairs at all.
    pub fn is_supervised(self) -> bool {
        matches!(self, PredictorKind::N2vEdge | PredictorKind::Spectral | PredictorKind::TopStacking)
    }
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PredictorKind {
    type Err = PredictError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PredictorKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| PredictError::UnknownPredictor(s.to_string()))
    }
}

impl Serialize for PredictorKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for PredictorKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Hyperparameters of every predictor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorConfig {
    pub skipgram: SkipGramConfig,
    pub spectral_dims: usize,
    /// Candidate L2 strengths of the logistic heads, tried strongest first.
    pub l2_grid: Vec<f64>,
    pub forest: ForestConfig,
    pub dcsbm: DcsbmConfig,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            skipgram: SkipGramConfig::default(),
            spectral_dims: 16,
            l2_grid: vec![1.0, 1e-1, 1e-2, 1e-3],
            forest: ForestConfig::default(),
            dcsbm: DcsbmConfig::default(),
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<(), PredictError> {
        if self.l2_grid.is_empty() || self.l2_grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(PredictError::Config("l2_grid needs non-negative finite strengths".into()));
        }
        if self.forest.tree_grid.is_empty() || self.forest.tree_grid.contains(&0) {
            return Err(PredictError::Config("forest tree_grid needs positive sizes".into()));
        }
        if self.spectral_dims == 0 {
            return Err(PredictError::Config("spectral_dims must be positive".into()));
        }
        let s = &self.skipgram;
        if s.dims == 0 || s.walk_length < 2 || s.window == 0 || s.epochs == 0 || !(s.learning_rate > 0.0) {
            return Err(PredictError::Config("skip-gram sizes must be positive".into()));
        }
        Ok(())
    }
}

/// Labeled pairs, possibly with repeats.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabeledPairSet {
    pub pairs: Vec<NodePair>,
    pub labels: Vec<bool>,
}

impl LabeledPairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Unique labeled pairs with multiplicities, in canonical pair order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightedPairs {
    pub pairs: Vec<NodePair>,
    pub labels: Vec<bool>,
    pub weights: Vec<f64>,
}

impl WeightedPairs {
    /// Collapses repeats; a pair must not carry both labels.
    pub fn from_labeled(set: &LabeledPairSet) -> Self {
        let mut counts: BTreeMap<(NodePair, bool), f64> = BTreeMap::new();
        for (p, &l) in set.pairs.iter().zip(&set.labels) {
            *counts.entry((*p, l)).or_insert(0.0) += 1.0;
        }
        let mut out = WeightedPairs::default();
        for ((p, l), w) in counts {
            debug_assert!(out.pairs.last() != Some(&p), "pair {p} carries both labels");
            out.pairs.push(p);
            out.labels.push(l);
            out.weights.push(w);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn has_both_classes(&self) -> bool {
        self.labels.iter().any(|&l| l) && self.labels.iter().any(|&l| !l)
    }
}

/// Everything a predictor may look at while fitting.
#[derive(Clone, Debug)]
pub struct FitInputs<'a> {
    /// The observed training graph.
    pub graph: Arc<Graph>,
    pub train: &'a WeightedPairs,
    pub val: &'a WeightedPairs,
    pub seed: u64,
    /// Seed of the skip-gram embedding, shared by both skip-gram predictors.
    pub embedding_seed: u64,
}

/// Reuses one skip-gram embedding across predictors of the same fold.
#[derive(Clone, Debug, Default)]
pub struct FitCache {
    skipgram: Option<(u64, Arc<Embedding>)>,
}

impl FitCache {
    fn skipgram(&mut self, inputs: &FitInputs<'_>, cfg: &SkipGramConfig) -> Result<Arc<Embedding>, PredictError> {
        if let Some((seed, emb)) = &self.skipgram {
            if *seed == inputs.embedding_seed {
                return Ok(Arc::clone(emb));
            }
        }
        let emb = Arc::new(skipgram::train_node_embedding(&inputs.graph, cfg, inputs.embedding_seed)?.embedding);
        self.skipgram = Some((inputs.embedding_seed, Arc::clone(&emb)));
        Ok(emb)
    }
}

/// A fitted, immutable score function.
#[derive(Clone, Debug)]
pub enum ScoreModel {
    Local { kind: PredictorKind, graph: Arc<Graph> },
    EmbeddingDot(Arc<Embedding>),
    EdgeHead { embedding: Arc<Embedding>, head: LogisticModel, l2: f64 },
    Blocks(BlockDensity),
    Dcsbm(DcsbmFit),
    Stacking { context: FeatureContext, forest: Forest },
}

impl ScoreModel {
    pub fn score(&self, p: NodePair) -> f64 {
        self.score_pairs(&[p])[0]
    }

    pub fn score_pairs(&self, pairs: &[NodePair]) -> Vec<f64> {
        match self {
            ScoreModel::Local { kind, graph } => pairs
                .iter()
                .map(|&p| match kind {
                    PredictorKind::AdamicAdar => local::adamic_adar(graph, p),
                    PredictorKind::Jaccard => local::jaccard(graph, p),
                    _ => local::preferential_attachment(graph, p),
                })
                .collect(),
            ScoreModel::EmbeddingDot(e) => pairs.iter().map(|p| e.dot(p.u(), p.v())).collect(),
            ScoreModel::EdgeHead { embedding, head, .. } => pairs
                .iter()
                .map(|p| head.predict(&embedding.hadamard(p.u(), p.v())))
                .collect(),
            ScoreModel::Blocks(b) => pairs.iter().map(|&p| b.score(p)).collect(),
            ScoreModel::Dcsbm(d) => pairs.iter().map(|&p| d.score(p)).collect(),
            ScoreModel::Stacking { context, forest } => context
                .extract_all(pairs)
                .iter()
                .map(|x| forest.score(x))
                .collect(),
        }
    }
}

/// Fits one predictor on the observed graph, using the validation pairs only
/// for the logistic L2 strength and the forest size.
pub fn fit_predictor(
    kind: PredictorKind,
    inputs: &FitInputs<'_>,
    config: &PredictorConfig,
    cache: &mut FitCache,
) -> Result<ScoreModel, PredictError> {
    let g = &inputs.graph;
    if g.edge_count() == 0 {
        return Err(PredictError::NoEdges);
    }
    if kind.is_supervised() {
        if !inputs.train.has_both_classes() {
            return Err(PredictError::SingleClass);
        }
        if !inputs.val.has_both_classes() {
            return Err(PredictError::SingleClassValidation);
        }
    }
    match kind {
        PredictorKind::AdamicAdar | PredictorKind::Jaccard | PredictorKind::PreferentialAttachment => {
            Ok(ScoreModel::Local {
                kind,
                graph: Arc::clone(g),
            })
        }
        PredictorKind::N2vDot => Ok(ScoreModel::EmbeddingDot(cache.skipgram(inputs, &config.skipgram)?)),
        PredictorKind::N2vEdge => {
            let embedding = cache.skipgram(inputs, &config.skipgram)?;
            fit_edge_head(embedding, inputs, &config.l2_grid)
        }
        PredictorKind::Spectral => {
            let embedding = Arc::new(spectral::spectral_embedding(g, config.spectral_dims, inputs.seed)?);
            fit_edge_head(embedding, inputs, &config.l2_grid)
        }
        PredictorKind::Modularity => Ok(ScoreModel::Blocks(BlockDensity::fit(g))),
        PredictorKind::MdlDcsbm => Ok(ScoreModel::Dcsbm(dcsbm::fit_dcsbm(g, &config.dcsbm, inputs.seed))),
        PredictorKind::TopStacking => fit_stacking(inputs, &config.forest),
    }
}

fn edge_design(embedding: &Embedding, pairs: &WeightedPairs) -> Design {
    let mut design = Design::new(embedding.dims());
    for i in 0..pairs.len() {
        let p = pairs.pairs[i];
        design.push(&embedding.hadamard(p.u(), p.v()), pairs.labels[i], pairs.weights[i]);
    }
    design
}

fn fit_edge_head(embedding: Arc<Embedding>, inputs: &FitInputs<'_>, grid: &[f64]) -> Result<ScoreModel, PredictError> {
    let train = edge_design(&embedding, inputs.train);
    let val = edge_design(&embedding, inputs.val);
    let mut best: Option<(f64, LogisticModel, f64)> = None;
    let mut warm: Option<LogisticModel> = None;
    for &l2 in grid {
        let model = LogisticModel::fit(&train, l2, warm.as_ref())?;
        let scores: Vec<f64> = (0..val.len()).map(|i| model.predict(val.row(i))).collect();
        let auc = weighted_auc(&scores, &val.labels, &val.weights).map_err(|_| PredictError::SingleClassValidation)?;
        if best.as_ref().is_none_or(|(b, ..)| auc > *b) {
            best = Some((auc, model.clone(), l2));
        }
        warm = Some(model);
    }
    let (_, head, l2) = best.expect("nonempty grid");
    Ok(ScoreModel::EdgeHead { embedding, head, l2 })
}

fn feature_design(context: &FeatureContext, pairs: &WeightedPairs) -> Design {
    let mut design = Design::new(FEATURE_DIMS);
    for (i, x) in context.extract_all(&pairs.pairs).iter().enumerate() {
        design.push(x, pairs.labels[i], pairs.weights[i]);
    }
    design
}

fn fit_stacking(inputs: &FitInputs<'_>, cfg: &ForestConfig) -> Result<ScoreModel, PredictError> {
    let context = FeatureContext::new(Arc::clone(&inputs.graph))?;
    let train = feature_design(&context, inputs.train);
    let val = feature_design(&context, inputs.val);
    let largest = *cfg.tree_grid.iter().max().expect("validated grid");
    let mut forest = Forest::fit(&train, largest, cfg.max_depth, cfg.max_bins, inputs.seed)?;
    let mut best: Option<(f64, usize)> = None;
    let mut sizes = cfg.tree_grid.clone();
    sizes.sort_unstable();
    for k in sizes {
        let scores: Vec<f64> = (0..val.len()).map(|i| forest.score_prefix(val.row(i), k)).collect();
        let auc = weighted_auc(&scores, &val.labels, &val.weights).map_err(|_| PredictError::SingleClassValidation)?;
        if best.is_none_or(|(b, _)| auc > b) {
            best = Some((auc, k));
        }
    }
    forest.truncate(best.expect("nonempty grid").1);
    Ok(ScoreModel::Stacking { context, forest })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Graph {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                if rng.random_bool(p) {
                    edges.push((a, b));
                }
            }
        }
        Graph::from_edges(n, edges).unwrap()
    }

    fn labeled(g: &Graph, rng: &mut ChaCha8Rng, count: usize) -> WeightedPairs {
        let n = g.node_count();
        let mut set = LabeledPairSet::default();
        let edges: Vec<NodePair> = g.edges().collect();
        while set.len() < count {
            if set.len() % 2 == 0 {
                set.pairs.push(edges[rng.random_range(0..edges.len())]);
                set.labels.push(true);
            } else {
                let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
                if a != b && !g.has_edge(a, b) {
                    set.pairs.push(NodePair::new(a, b));
                    set.labels.push(false);
                }
            }
        }
        WeightedPairs::from_labeled(&set)
    }

    #[test]
    fn names_round_trip() {
        for k in PredictorKind::ALL {
            assert_eq!(k.name().parse::<PredictorKind>().unwrap(), k);
        }
    }

    #[test]
    fn every_predictor_is_symmetric_and_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let g = Arc::new(random_graph(30, 0.15, &mut rng));
        let train = labeled(&g, &mut rng, 200);
        let val = labeled(&g, &mut rng, 100);
        let mut config = PredictorConfig::default();
        config.skipgram.dims = 8;
        config.forest.tree_grid = vec![5, 10];
        let inputs = FitInputs {
            graph: Arc::clone(&g),
            train: &train,
            val: &val,
            seed: 3,
            embedding_seed: 4,
        };
        let mut cache = FitCache::default();
        for kind in PredictorKind::ALL {
            let model = fit_predictor(kind, &inputs, &config, &mut cache).unwrap();
            for _ in 0..50 {
                let (a, b) = (rng.random_range(0..30), rng.random_range(0..30));
                if a == b {
                    continue;
                }
                let s1 = model.score(NodePair::new(a, b));
                let s2 = model.score(NodePair::new(b, a));
                assert_eq!(s1, s2, "{kind}");
                assert!(s1.is_finite(), "{kind}");
            }
        }
    }

    #[test]
    fn supervised_predictors_need_both_classes() {
        let g = Arc::new(crate::graph::fixtures::cycle(6));
        let only_pos = WeightedPairs {
            pairs: vec![NodePair::new(0, 1)],
            labels: vec![true],
            weights: vec![1.0],
        };
        let inputs = FitInputs {
            graph: g,
            train: &only_pos,
            val: &only_pos,
            seed: 0,
            embedding_seed: 0,
        };
        let err = fit_predictor(PredictorKind::TopStacking, &inputs, &PredictorConfig::default(), &mut FitCache::default());
        assert!(matches!(err, Err(PredictError::SingleClass)));
    }
}
