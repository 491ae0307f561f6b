//! The full experiment pipeline in a temporary directory: synthesize a table,
//! featurize, split, train and evaluate, then print the summary table.
//!
//! cargo run --release --example end_to_end

use dti_core::data::SynthConfig;
use dti_core::experiment::{cmd_evaluate, cmd_featurize, cmd_split, cmd_synth_data, cmd_train, ExperimentConfig};

fn main() -> dti_core::Result<()> {
    let dir = tempfile::tempdir().map_err(|e| dti_core::Error::Config(e.to_string()))?;
    let data = dir.path().join("synthetic.csv");
    cmd_synth_data(
        &SynthConfig {
            n_compounds: 15,
            n_targets: 10,
            n_records: 150,
            ..SynthConfig::default()
        },
        &data,
    )?;

    let toml = format!(
        r#"
        [data]
        path = {data:?}
        filter_threshold = 2

        [split]
        schemes = ["warm", "cold_drug", "cold_target"]
        n_folds = 3
        seeds = [0, 1]

        [model]
        variant = "ivpgan"
        gconv_widths = [16, 32]
        generator_hidden = [64, 16]

        [train]
        epochs = 15
        batch_size = 16
        generator_lr = 1e-3

        [output]
        dir = {out:?}
        "#,
        data = data.display().to_string(),
        out = dir.path().join("out").display().to_string(),
    );
    let cfg = ExperimentConfig::from_toml(&toml, &[])?;

    let f = cmd_featurize(&cfg)?;
    println!(
        "featurized {} compounds, {} targets",
        f.featurize.compounds, f.featurize.targets
    );
    println!("{} fold files", cmd_split(&cfg)?.len());
    let t = cmd_train(&cfg)?;
    println!("trained {} cells ({} failed)", t.trained.len(), t.failures.len());
    let report = cmd_evaluate(&cfg)?;
    println!("{:<12} {:<6} {:>8} {:>8}", "split", "metric", "mean", "std");
    for r in &report.reports {
        println!("{:<12} {:<6} {:>8.4} {:>8.4}", r.scheme, r.metric, r.mean, r.std);
    }
    Ok(())
}
