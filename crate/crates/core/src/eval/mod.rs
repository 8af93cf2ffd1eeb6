//! Evaluation protocol: splits, logistic mapping, agreement criteria and
//! repeated experiments.

pub mod experiment;
pub mod logistic;
pub mod manifest;
pub mod metrics;
pub mod split;

pub use experiment::{
    median, run_experiment, ExperimentData, ExperimentReport, FpsGroup, IterationResult, ModelConfig, Protocol,
    SkippedIteration, REPORT_FORMAT_VERSION,
};
pub use logistic::{logistic, logistic_fit, LogisticFit, MIN_LOGISTIC_POINTS};
pub use manifest::{DatasetManifest, ManifestRow, RowSource};
pub use metrics::{average_ranks, correlations, krocc, pearson, psnr, rmse, srocc, Correlations, Evaluation, Mapping};
pub use split::{all_content_splits, assert_content_disjoint, part_sizes, split_by_content, Split, SplitSpec};
