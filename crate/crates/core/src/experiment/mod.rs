//! Reproducible experiments: a TOML configuration plus the featurize, split,
//! train, evaluate and synthetic-data commands behind the `dti` binary.
//!
//! Output layout under `output.dir`:
//!
//! ```text
//! cache/                          feature cache (manifest.json, compounds.csv, targets.csv)
//! splits/{scheme}_seed{s}.json    fold assignments
//! {variant}/{scheme}/seed{s}/fold{f}/
//!     checkpoint.bin  history.csv  config.json  predictions.csv
//! {variant}/metrics.json          aggregated metric reports
//! {variant}/summary.csv           dataset, split, model, metric, mean, std
//! ```

mod commands;
mod config;

pub use commands::{
    cell_dir, cmd_evaluate, cmd_featurize, cmd_split, cmd_synth_data, cmd_train, load_prepared, run_cell, split_path,
    CellFailure, CellResult, EvaluationReport, FeaturizeSummary, PreparedData, TrainSummary,
};
pub use config::{apply_overrides, DataSection, ExperimentConfig, OutputSection, SplitSection, CACHE_DIR_ENV};
