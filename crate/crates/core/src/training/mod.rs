//! Datasets, the training loop, evaluation and the experiment protocols.

mod dataset;
mod protocols;
mod trainer;

pub use dataset::{
    case_seed, derive_seeds, generate_dataset, generate_dataset_with_progress, quantize_case, rmse, split_dataset, Dataset, Generated,
    Normalization, PreparedData, Split,
};
pub use protocols::{
    ablation_run, compare_homo_hetero, discard, data_size_runs, data_size_study, mean_std, quasi_random_search,
    train_seeds, AblationRow, AblationTable, Comparison, DataSizeRow, ModelSummary, ScrambledHalton,
    RunSink, SearchRow, SearchSpace,
};
pub use trainer::{
    evaluate, percentile_ranks, predict, score_predictions, total_displacement, total_displacement_rmse,
    train, EvalMetrics, RunMetrics, TrainConfig, TrainedModel,
};
