//! Evaluation protocol: splits, metrics, hyperparameter search and the
//! repeated-run experiment harness.

mod metrics;
mod runner;
mod search;
mod split;

pub use metrics::{f1_score, roc_auc};
pub use runner::{
    compare_omic_levels, embedding_for, repeated_eval, search_hyperparameters, topk_sweep, EvalReport,
    ExperimentData, OmicComparison, RunMetrics, RunnerSettings, SweepCurve, SweepPoint,
};
pub use search::{random_search, sample_configs, write_trial_log, SearchSpace, TrialConfig, TrialRecord};
pub use split::{split_ids, stratified_split, SplitIndices, SplitSpec};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("labels contain a single class")]
    SingleClassLabels,
    #[error("scores contain NaN")]
    NonFiniteScore,
    #[error("class {label} has only {count} samples, too few to stratify")]
    ClassTooSmall { label: u8, count: usize },
    #[error("invalid evaluation spec: {0}")]
    InvalidSpec(String),
    #[error("every search trial failed")]
    AllTrialsFailed,
    #[error(transparent)]
    Embed(#[from] crate::embed::EmbedError),
    #[error(transparent)]
    Represent(#[from] crate::represent::RepresentError),
    #[error(transparent)]
    Svm(#[from] crate::svm::SvmError),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
}
