//! Repeated cross-validation of predictors under one missingness function.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::auc::weighted_auc;
use super::pools::{build_negative_pool, NegativePools, DEFAULT_POOL_CAP};
use super::records::{AucRecord, Status};
use super::split::{balance_resample, make_split, Which};
use super::EvalError;
use crate::graph::Graph;
use crate::missingness::{draw_sample, SampleOutcome, SamplerSpec};
use crate::predictors::{fit_predictor, FitCache, FitInputs, PredictorConfig, PredictorKind, WeightedPairs};
use crate::seed::{cell_seed, SeedPath};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Edge retention of every sampler.
    pub retention: f64,
    pub repeats: usize,
    pub folds: usize,
    /// Pairs drawn per class for every balanced set.
    pub balance_size: usize,
    pub pool_cap: usize,
    /// Draw a fresh sample for every fold instead of once per repeat.
    pub redraw_per_fold: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            retention: 0.8,
            repeats: 5,
            folds: 5,
            balance_size: 10_000,
            pool_cap: DEFAULT_POOL_CAP,
            redraw_per_fold: false,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |what: &str| Err(EvalError::Config(what.to_string()));
        if !(self.retention > 0.0 && self.retention < 1.0) {
            return bad("retention must lie in (0, 1)");
        }
        if self.repeats < 1 {
            return bad("repeats must be at least 1");
        }
        if self.folds < 2 {
            return bad("folds must be at least 2");
        }
        if self.balance_size < 1 || self.pool_cap < 1 {
            return bad("balance_size and pool_cap must be positive");
        }
        Ok(())
    }
}

/// A named network of the corpus.
#[derive(Clone, Debug)]
pub struct Network {
    pub name: String,
    pub domain: String,
    pub graph: Arc<Graph>,
}

/// All records of one (network, sampler, predictor) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub predictor: PredictorKind,
    pub records: Vec<AucRecord>,
    /// First error that made the cell fail; every record is then failed.
    pub failure: Option<String>,
}

struct Stage {
    outcome: SampleOutcome,
    pools: NegativePools,
    split_seed: u64,
}

fn path(master: u64, purpose: &str, net: &Network, spec: &SamplerSpec, repeat: usize) -> SeedPath {
    SeedPath::new(master)
        .name(purpose)
        .name(&net.name)
        .name(spec.kind.name())
        .index(repeat as u64)
}

fn stage(net: &Network, spec: &SamplerSpec, protocol: &ProtocolConfig, master: u64, repeat: usize, fold: Option<usize>) -> Result<Stage, EvalError> {
    let with_fold = |p: SeedPath| match fold {
        Some(f) => p.index(f as u64).finish(),
        None => p.finish(),
    };
    let outcome = draw_sample(&net.graph, spec, protocol.retention, with_fold(path(master, "sample", net, spec, repeat)))?;
    let pools = build_negative_pool(
        &net.graph,
        &outcome,
        protocol.retention,
        with_fold(path(master, "negatives", net, spec, repeat)),
        protocol.pool_cap,
    )?;
    Ok(Stage {
        outcome,
        pools,
        split_seed: with_fold(path(master, "split", net, spec, repeat)),
    })
}

/// Evaluates every predictor of `predictors` under one sampler, sharing the
/// samples, splits and balanced sets (their seeds do not depend on the
/// predictor). Returns one [`CellResult`] per predictor, in input order.
pub fn run_sampler_cells(
    net: &Network,
    spec: &SamplerSpec,
    predictors: &[PredictorKind],
    protocol: &ProtocolConfig,
    config: &PredictorConfig,
    master: u64,
) -> Vec<CellResult> {
    let g = &net.graph;
    let mut failures: Vec<Option<String>> = vec![None; predictors.len()];
    let mut aucs: Vec<Vec<Option<f64>>> = vec![Vec::new(); predictors.len()];
    let mut shared: Option<Stage> = None;
    for repeat in 0..protocol.repeats {
        if !protocol.redraw_per_fold {
            match stage(net, spec, protocol, master, repeat, None) {
                Ok(s) => shared = Some(s),
                Err(e) => {
                    fail_all(&mut failures, &format!("repeat {repeat}: {e}"));
                    break;
                }
            }
        }
        for fold in 0..protocol.folds {
            let local;
            let st = if protocol.redraw_per_fold {
                match stage(net, spec, protocol, master, repeat, Some(fold)) {
                    Ok(s) => {
                        local = s;
                        &local
                    }
                    Err(e) => {
                        fail_all(&mut failures, &format!("repeat {repeat} fold {fold}: {e}"));
                        break;
                    }
                }
            } else {
                shared.as_ref().expect("stage drawn for this repeat")
            };
            let fold_result = evaluate_fold(net, spec, st, predictors, &failures, protocol, config, master, repeat, fold);
            match fold_result {
                Ok(per_predictor) => {
                    for (i, r) in per_predictor.into_iter().enumerate() {
                        match r {
                            Some(Ok(a)) => aucs[i].push(Some(a)),
                            Some(Err(e)) => {
                                if failures[i].is_none() {
                                    failures[i] = Some(format!("repeat {repeat} fold {fold}: {e}"));
                                }
                            }
                            None => {}
                        }
                    }
                }
                Err(e) => fail_all(&mut failures, &format!("repeat {repeat} fold {fold}: {e}")),
            }
            if failures.iter().all(Option::is_some) {
                break;
            }
        }
        if failures.iter().all(Option::is_some) {
            break;
        }
    }
    predictors
        .iter()
        .enumerate()
        .map(|(i, &kind)| {
            let failure = failures[i].take();
            let mut records = Vec::with_capacity(protocol.repeats * protocol.folds);
            for repeat in 0..protocol.repeats {
                for fold in 0..protocol.folds {
                    let auc = if failure.is_none() {
                        aucs[i][repeat * protocol.folds + fold]
                    } else {
                        None
                    };
                    records.push(AucRecord {
                        network: net.name.clone(),
                        domain: net.domain.clone(),
                        sampler: spec.kind.name().to_string(),
                        predictor: kind.name().to_string(),
                        repeat,
                        fold,
                        auc,
                        n: g.node_count(),
                        m: g.edge_count(),
                        seed: cell_seed(master, &net.name, spec.kind.name(), kind.name(), repeat, fold),
                        status: if failure.is_none() { Status::Ok } else { Status::Failed },
                    });
                }
            }
            CellResult {
                predictor: kind,
                records,
                failure,
            }
        })
        .collect()
}

/// Evaluates one cell; see [`run_sampler_cells`].
pub fn run_cell(
    net: &Network,
    spec: &SamplerSpec,
    predictor: PredictorKind,
    protocol: &ProtocolConfig,
    config: &PredictorConfig,
    master: u64,
) -> CellResult {
    run_sampler_cells(net, spec, &[predictor], protocol, config, master)
        .pop()
        .expect("one cell requested")
}

fn fail_all(failures: &mut [Option<String>], reason: &str) {
    for f in failures.iter_mut().filter(|f| f.is_none()) {
        *f = Some(reason.to_string());
    }
}

/// Balanced sets of one fold, collapsed to weighted unique pairs.
pub struct FoldData {
    pub graph: Arc<Graph>,
    pub train: WeightedPairs,
    pub val: WeightedPairs,
    pub test: WeightedPairs,
}

pub fn prepare_fold(
    g: &Graph,
    outcome: &SampleOutcome,
    pools: &NegativePools,
    protocol: &ProtocolConfig,
    split_seed: u64,
    resample: SeedPath,
    repeat: usize,
    fold: usize,
) -> Result<FoldData, EvalError> {
    let plan = make_split(g, outcome, pools, repeat, fold, protocol.folds, split_seed)?;
    let draw = |which: Which, tag: &str| -> Result<WeightedPairs, EvalError> {
        let seed = resample.clone().name(tag).finish();
        Ok(WeightedPairs::from_labeled(&balance_resample(&plan, which, protocol.balance_size, seed)?))
    };
    Ok(FoldData {
        graph: Arc::new(g.with_edge_subset(&plan.e_tr)),
        train: draw(Which::Train, "train")?,
        val: draw(Which::Validation, "validation")?,
        test: draw(Which::Test, "test")?,
    })
}

#[allow(clippy::too_many_arguments)]
fn evaluate_fold(
    net: &Network,
    spec: &SamplerSpec,
    st: &Stage,
    predictors: &[PredictorKind],
    failures: &[Option<String>],
    protocol: &ProtocolConfig,
    config: &PredictorConfig,
    master: u64,
    repeat: usize,
    fold: usize,
) -> Result<Vec<Option<Result<f64, EvalError>>>, EvalError> {
    let resample = path(master, "resample", net, spec, repeat).index(fold as u64);
    let data = prepare_fold(&net.graph, &st.outcome, &st.pools, protocol, st.split_seed, resample, repeat, fold)?;
    let inputs_base = FitInputs {
        graph: Arc::clone(&data.graph),
        train: &data.train,
        val: &data.val,
        seed: 0,
        embedding_seed: path(master, "skipgram", net, spec, repeat).index(fold as u64).finish(),
    };
    let mut cache = FitCache::default();
    Ok(predictors
        .iter()
        .zip(failures)
        .map(|(&kind, failed)| {
            if failed.is_some() {
                return None;
            }
            let inputs = FitInputs {
                seed: cell_seed(master, &net.name, spec.kind.name(), kind.name(), repeat, fold),
                ..inputs_base.clone()
            };
            Some(score_test(kind, &inputs, &data.test, config, &mut cache))
        })
        .collect())
}

fn score_test(
    kind: PredictorKind,
    inputs: &FitInputs<'_>,
    test: &WeightedPairs,
    config: &PredictorConfig,
    cache: &mut FitCache,
) -> Result<f64, EvalError> {
    let model = fit_predictor(kind, inputs, config, cache)?;
    let scores = model.score_pairs(&test.pairs);
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(EvalError::Config(format!("{kind} produced a non-finite score {bad}")));
    }
    Ok(weighted_auc(&scores, &test.labels, &test.weights)?)
}
