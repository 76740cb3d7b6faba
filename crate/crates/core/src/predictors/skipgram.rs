//! Node embeddings from uniform random walks and skip-gram with negative
//! sampling.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use super::PredictError;
use crate::graph::{Graph, NodeId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkipGramConfig {
    pub dims: usize,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub window: usize,
    pub negatives: usize,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        Self {
            dims: 64,
            walks_per_node: 10,
            walk_length: 40,
            window: 5,
            negatives: 5,
            learning_rate: 0.025,
            epochs: 1,
        }
    }
}

/// One row of `dims` reals per node.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    dims: usize,
    data: Vec<f64>,
}

impl Embedding {
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dims = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == dims), "ragged embedding rows");
        Self {
            dims,
            data: rows.concat(),
        }
    }

    pub fn node_count(&self) -> usize {
        if self.dims == 0 {
            0
        } else {
            self.data.len() / self.dims
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn vector(&self, v: NodeId) -> &[f64] {
        &self.data[v * self.dims..(v + 1) * self.dims]
    }

    pub fn dot(&self, a: NodeId, b: NodeId) -> f64 {
        self.vector(a).iter().zip(self.vector(b)).map(|(x, y)| x * y).sum()
    }

    /// Elementwise product of the two endpoint vectors.
    pub fn hadamard(&self, a: NodeId, b: NodeId) -> Vec<f64> {
        self.vector(a).iter().zip(self.vector(b)).map(|(x, y)| x * y).collect()
    }
}

/// Trained embedding plus the skip-gram loss after every epoch, measured on
/// a fixed sample of (center, context, negatives) tuples.
#[derive(Clone, Debug)]
pub struct TrainedEmbedding {
    pub embedding: Embedding,
    pub epoch_loss: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Uniform random walks: `walks_per_node` rounds, each starting once from
/// every non-isolated node in shuffled order.
pub fn random_walks<R: Rng + ?Sized>(g: &Graph, cfg: &SkipGramConfig, rng: &mut R) -> Vec<Vec<NodeId>> {
    let mut starts: Vec<NodeId> = (0..g.node_count()).filter(|&v| g.deg(v) > 0).collect();
    let mut walks = Vec::with_capacity(starts.len() * cfg.walks_per_node);
    for _ in 0..cfg.walks_per_node {
        starts.shuffle(rng);
        for &s in &starts {
            let mut walk = Vec::with_capacity(cfg.walk_length);
            walk.push(s);
            while walk.len() < cfg.walk_length {
                let nbrs = g.neighbors(*walk.last().unwrap());
                walk.push(nbrs[rng.random_range(0..nbrs.len())]);
            }
            walks.push(walk);
        }
    }
    walks
}

const PROBE_TUPLES: usize = 20_000;

struct Probe {
    center: NodeId,
    context: NodeId,
    negatives: Vec<NodeId>,
}

fn probe_tuples<R: Rng + ?Sized>(
    walks: &[Vec<NodeId>],
    cfg: &SkipGramConfig,
    noise: &WeightedAliasIndex<f64>,
    rng: &mut R,
) -> Vec<Probe> {
    let mut out = Vec::with_capacity(PROBE_TUPLES);
    while out.len() < PROBE_TUPLES {
        let walk = &walks[rng.random_range(0..walks.len())];
        let i = rng.random_range(0..walk.len());
        let lo = i.saturating_sub(cfg.window);
        let hi = (i + cfg.window + 1).min(walk.len());
        let j = rng.random_range(lo..hi);
        if j == i {
            continue;
        }
        let negatives = (0..cfg.negatives)
            .map(|_| noise.sample(rng))
            .filter(|&t| t != walk[j])
            .collect();
        out.push(Probe {
            center: walk[i],
            context: walk[j],
            negatives,
        });
    }
    out
}

fn probe_loss(probe: &[Probe], input: &[f64], output: &[f64], d: usize) -> f64 {
    let dot = |a: NodeId, b: NodeId| -> f64 {
        input[a * d..(a + 1) * d].iter().zip(&output[b * d..(b + 1) * d]).map(|(x, y)| x * y).sum()
    };
    let mut loss = 0.0;
    for t in probe {
        loss -= sigmoid(dot(t.center, t.context)).max(1e-300).ln();
        for &neg in &t.negatives {
            loss -= (1.0 - sigmoid(dot(t.center, neg))).max(1e-300).ln();
        }
    }
    loss / probe.len() as f64
}

pub fn train_node_embedding(g: &Graph, cfg: &SkipGramConfig, seed: u64) -> Result<TrainedEmbedding, PredictError> {
    if g.edge_count() == 0 {
        return Err(PredictError::NoEdges);
    }
    if cfg.dims == 0 || cfg.window == 0 || cfg.walk_length < 2 || cfg.epochs == 0 {
        return Err(PredictError::Config("skip-gram sizes must be positive".into()));
    }
    let n = g.node_count();
    let d = cfg.dims;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let walks = random_walks(g, cfg, &mut rng);

    let mut counts = vec![0.0f64; n];
    for w in &walks {
        for &v in w {
            counts[v] += 1.0;
        }
    }
    let noise_weights: Vec<f64> = counts.iter().map(|c| c.powf(0.75)).collect();
    let noise = WeightedAliasIndex::new(noise_weights)
        .map_err(|e| PredictError::Config(format!("noise distribution: {e}")))?;

    let mut input: Vec<f64> = (0..n * d).map(|_| (rng.random::<f64>() - 0.5) / d as f64).collect();
    let mut output = vec![0.0f64; n * d];
    let mut grad = vec![0.0f64; d];

    let probe = probe_tuples(&walks, cfg, &noise, &mut rng);
    let tokens: usize = walks.iter().map(Vec::len).sum();
    let total = (tokens * cfg.epochs) as f64;
    let mut processed = 0usize;
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        for walk in &walks {
            for (i, &center) in walk.iter().enumerate() {
                let lr = (cfg.learning_rate * (1.0 - processed as f64 / total)).max(cfg.learning_rate * 1e-4);
                processed += 1;
                let lo = i.saturating_sub(cfg.window);
                let hi = (i + cfg.window + 1).min(walk.len());
                for (j, &context) in walk.iter().enumerate().take(hi).skip(lo) {
                    if j == i {
                        continue;
                    }
                    let vin = &mut input[center * d..(center + 1) * d];
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for k in 0..=cfg.negatives {
                        let (target, label) = if k == 0 {
                            (context, 1.0)
                        } else {
                            let t = noise.sample(&mut rng);
                            if t == context {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let vout = &mut output[target * d..(target + 1) * d];
                        let score: f64 = vin.iter().zip(vout.iter()).map(|(a, b)| a * b).sum();
                        let p = sigmoid(score);
                        let step = lr * (label - p);
                        for ((g, o), x) in grad.iter_mut().zip(vout.iter_mut()).zip(vin.iter()) {
                            *g += step * *o;
                            *o += step * x;
                        }
                    }
                    for (x, g) in vin.iter_mut().zip(&grad) {
                        *x += g;
                    }
                }
            }
        }
        epoch_loss.push(probe_loss(&probe, &input, &output, d));
    }
    if input.iter().any(|x| !x.is_finite()) {
        return Err(PredictError::NonFinite("skip-gram embedding"));
    }
    Ok(TrainedEmbedding {
        embedding: Embedding { dims: d, data: input },
        epoch_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosine(e: &Embedding, a: NodeId, b: NodeId) -> f64 {
        e.dot(a, b) / (e.dot(a, a).sqrt() * e.dot(b, b).sqrt())
    }

    fn two_cliques(k: usize) -> Graph {
        let mut edges = Vec::new();
        for base in [0, k] {
            for i in 0..k {
                for j in (i + 1)..k {
                    edges.push((base + i, base + j));
                }
            }
        }
        Graph::from_edges(2 * k, edges).unwrap()
    }

    #[test]
    fn shape_and_finiteness() {
        let g = two_cliques(4);
        let cfg = SkipGramConfig {
            dims: 8,
            ..SkipGramConfig::default()
        };
        let t = train_node_embedding(&g, &cfg, 1).unwrap();
        assert_eq!(t.embedding.node_count(), 8);
        assert_eq!(t.embedding.dims(), 8);
        assert!(t.embedding.data.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn cliques_embed_apart() {
        let g = two_cliques(10);
        let cfg = SkipGramConfig {
            dims: 16,
            ..SkipGramConfig::default()
        };
        for seed in 0..5 {
            let e = train_node_embedding(&g, &cfg, seed).unwrap().embedding;
            let (mut within, mut nw, mut across, mut na) = (0.0, 0, 0.0, 0);
            for a in 0..20 {
                for b in (a + 1)..20 {
                    if (a < 10) == (b < 10) {
                        within += cosine(&e, a, b);
                        nw += 1;
                    } else {
                        across += cosine(&e, a, b);
                        na += 1;
                    }
                }
            }
            assert!(within / nw as f64 > across / na as f64, "seed {seed}");
        }
    }

    #[test]
    fn no_edges_is_an_error() {
        let g = Graph::from_edges(3, []).unwrap();
        assert!(matches!(
            train_node_embedding(&g, &SkipGramConfig::default(), 0),
            Err(PredictError::NoEdges)
        ));
    }

    #[test]
    fn dot_of_equal_vectors_is_squared_norm() {
        let e = Embedding::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![-2.0, 1.0]]);
        assert_eq!(e.dot(0, 1), 5.0);
        assert_eq!(e.dot(0, 2), 0.0);
        assert_eq!(e.hadamard(0, 2), vec![-2.0, 2.0]);
    }
}
