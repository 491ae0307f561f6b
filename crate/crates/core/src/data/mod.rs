//! Interaction tables: loading, threshold filtering, cross-validation folds,
//! cached featurization and synthetic table generation.

mod featurize;
mod filter;
mod split;
mod synth;
mod table;

pub use featurize::{
    featurize_cached, featurize_table, BadRecord, CompoundFeatures, FeatureCache, FeaturizeConfig, FeaturizeReport,
    TargetFeatures,
};
pub use filter::{apply_filter_threshold, RemovalReport};
pub use split::{split, FoldAssignment, SplitScheme};
pub use synth::{synth_table, SynthConfig, SynthMode};
pub use table::{load_table, read_table, InteractionRecord, InteractionTable, Schema};
