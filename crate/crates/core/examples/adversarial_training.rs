//! Train the three model variants on a small synthetic table and compare
//! validation error, printing the loss history of the adversarial model.
//!
//! cargo run --release --example adversarial_training

use dti_core::adversarial::{evaluate_set, train, TrainConfig};
use dti_core::data::{featurize_table, split, synth_table, FeaturizeConfig, SplitScheme, SynthConfig};
use dti_core::nn::{DtiModel, EncodedSet, FeatureStandardizer, ModelConfig, ModelVariant};

fn main() -> dti_core::Result<()> {
    let table = synth_table(&SynthConfig {
        n_compounds: 12,
        n_targets: 10,
        n_records: 120,
        ..SynthConfig::default()
    })?;
    let (cache, table, _) = featurize_table(&table, &FeaturizeConfig::default(), false)?;
    let folds = split(&table, SplitScheme::Warm, 5, 0)?;
    let rows = |idx: &[usize]| -> Vec<(String, String, f64)> {
        idx.iter()
            .map(|&i| {
                let r = &table.records()[i];
                (r.compound_id.clone(), r.target_id.clone(), r.affinity)
            })
            .collect()
    };
    let train_rows = rows(&folds.training_indices(0));
    let val_rows = rows(&folds.validation_indices(0));

    let standardizer = FeatureStandardizer::fit(
        &train_rows
            .iter()
            .map(|(_, t, _)| cache.targets[t].psc.as_slice())
            .collect::<Vec<_>>(),
    )?;
    let encode = |rows: &[(String, String, f64)]| {
        EncodedSet::build(
            &cache,
            rows.iter().map(|(c, t, y)| (c.as_str(), t.as_str(), *y)),
            &standardizer,
        )
    };
    let train_set = encode(&train_rows)?;
    let val_set = encode(&val_rows)?;

    let cfg = TrainConfig {
        epochs: 40,
        generator_lr: 1e-3,
        batch_size: 16,
        ..TrainConfig::default()
    };
    for variant in ModelVariant::ALL {
        let model_cfg = ModelConfig {
            variant,
            gconv_widths: vec![32, 64],
            generator_hidden: vec![128, 32],
            ..ModelConfig::default()
        };
        let k = cfg.resolved_k(train_set.len());
        let mut model = DtiModel::new(&model_cfg, 1024, k, standardizer.clone(), 7)?;
        let outcome = train(&mut model, &train_set, None, &cfg)?;
        let m = evaluate_set(&model, &val_set)?;
        println!(
            "{:<14} validation rmse {:.3} ci {:.3}",
            variant.name(),
            m.rmse,
            m.ci.unwrap_or(f64::NAN)
        );
        if variant.adversarial() {
            println!("  epoch      mse      adv     disc");
            for h in outcome.history.iter().step_by(10) {
                println!(
                    "  {:>5} {:>8.4} {:>8.4} {:>8.4}",
                    h.epoch,
                    h.mse,
                    h.adv.unwrap_or(f64::NAN),
                    h.disc.unwrap_or(f64::NAN)
                );
            }
        }
    }
    Ok(())
}
