//! Evaluation protocol: negative pools, fold splits, balanced resampling,
//! AUC scoring and result records.

mod auc;
mod pools;
mod records;
mod run;
mod split;

use thiserror::Error;

use crate::missingness::SampleError;
use crate::predictors::PredictError;

pub use auc::{auc, weighted_auc, AucError};
pub use pools::{build_negative_pool, candidate_non_edges, NegativePools, DEFAULT_POOL_CAP};
pub use records::{read_records, sort_records, write_records, write_row, AucRecord, RecordError, Status, RESULT_COLUMNS};
pub use run::{prepare_fold, run_cell, run_sampler_cells, CellResult, FoldData, Network, ProtocolConfig};
pub use split::{balance_resample, fold_bounds, make_split, SplitPlan, Which};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error(transparent)]
    Auc(#[from] AucError),
    #[error(transparent)]
    Records(#[from] RecordError),
    #[error("the network is complete, so there are no negative pairs")]
    CompleteGraph,
    #[error("{have} edges cannot fill {folds} folds")]
    TooFewEdges { have: usize, folds: usize },
    #[error("{have} observed non-edges cannot fill {folds} folds")]
    TooFewNegatives { have: usize, folds: usize },
    #[error("fold {fold} out of range for {folds} folds")]
    Folds { fold: usize, folds: usize },
    #[error("no pairs to resample from: {0}")]
    EmptyPool(&'static str),
    #[error("invalid protocol: {0}")]
    Config(String),
}
