//! Accuracy, k-fold protocol, the variant × trait grid, synthetic data and
//! the results table.

mod folds;
mod metrics;
mod report;
mod runner;
mod synthetic;

pub use folds::{kfold_split, stratify_binary, BalancedView, FoldPlan, FoldRound};
pub use metrics::{accuracy, ConfusionCounts};
pub use report::{
    hyper_digest, published_accuracy, BalanceRecord, CellSummary, ExperimentReport, RoundRecord,
    REPORT_FORMAT, REPORT_VERSION, TABLE_TRAITS,
};
pub use runner::{
    parallel_map, plan_experiment, round_record, run_experiment, score, train_job,
    ExperimentConfig, ExperimentPlan, Job,
};
pub use synthetic::{generate_synthetic_corpus, planted_ngram, SyntheticSpec};
