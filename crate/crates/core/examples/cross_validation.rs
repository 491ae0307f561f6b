//! Synthetic interaction table, threshold filtering, and warm / cold-drug /
//! cold-target fold assignments.
//!
//! cargo run --release --example cross_validation

use std::collections::BTreeSet;

use dti_core::data::{apply_filter_threshold, split, synth_table, SplitScheme, SynthConfig};

fn main() -> dti_core::Result<()> {
    let table = synth_table(&SynthConfig {
        n_compounds: 30,
        n_targets: 12,
        n_records: 200,
        ..SynthConfig::default()
    })?;
    println!(
        "{} records, {} compounds, {} targets",
        table.len(),
        table.compounds().len(),
        table.targets().len()
    );

    let (filtered, report) = apply_filter_threshold(&table, 5, false)?;
    println!(
        "threshold 5: removed {} compounds and {} targets in {} sweeps; {} records left",
        report.removed_compounds.len(),
        report.removed_targets.len(),
        report.sweeps,
        filtered.len()
    );

    for scheme in SplitScheme::ALL {
        let a = split(&filtered, scheme, 5, 42)?;
        let mut line = format!("{scheme:<12} fold sizes {:?}", a.fold_sizes());
        if scheme != SplitScheme::Warm {
            let val: BTreeSet<&str> = a
                .validation_indices(0)
                .iter()
                .map(|&i| {
                    let r = &filtered.records()[i];
                    if scheme == SplitScheme::ColdDrug {
                        r.compound_id.as_str()
                    } else {
                        r.target_id.as_str()
                    }
                })
                .collect();
            let leaked = a.training_indices(0).iter().any(|&i| {
                let r = &filtered.records()[i];
                val.contains(if scheme == SplitScheme::ColdDrug {
                    r.compound_id.as_str()
                } else {
                    r.target_id.as_str()
                })
            });
            line += &format!("; fold 0 holds {} entities, leaked into training: {leaked}", val.len());
        }
        println!("{line}");
    }
    Ok(())
}
