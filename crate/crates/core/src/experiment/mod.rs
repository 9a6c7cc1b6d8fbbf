//! Experiment orchestration: configuration, the end-to-end pipeline, studies
//! built on top of it, and CSV emission.

pub mod config;
pub mod output;
mod pipeline;
mod studies;

pub use config::{
    BaselineKind, ExperimentConfig, InputSource, DATA_DIR_ENV, REDUCED_TEST, REDUCED_TRAIN,
};
pub use output::{
    fmt_num, history_table, kernel_tables, pr_table, result_table, shot_tables, sweep_table,
    CsvTable, VERSION,
};
pub use pipeline::{
    features_from_probabilities, load_data, resolve_data_dir, run_train, shot_seeds, train_readout,
    DataBundle, Inputs, PcaStore, Pipeline, RunResult,
};
pub use studies::{
    default_time_grid, run_baseline, run_kernel, run_pr_study, run_shot_study, run_sweep,
    KernelOutput, PrRow, ShotRun, ShotStudy, SweepRow, DEFAULT_PR_POINTS,
};
