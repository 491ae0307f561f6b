use serde::Serialize;

use super::table::InteractionTable;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemovalReport {
    pub threshold: usize,
    pub single_pass: bool,
    /// Sweeps performed, including the final one that removed nothing.
    pub sweeps: usize,
    pub removed_compounds: Vec<String>,
    pub removed_targets: Vec<String>,
    pub records_before: usize,
    pub records_after: usize,
}

/// Drops every compound and target with at most `t` records. By default the
/// removal repeats until no entity is at or below the threshold; with
/// `single_pass` the counts are taken once and one sweep is applied.
pub fn apply_filter_threshold(
    table: &InteractionTable,
    t: usize,
    single_pass: bool,
) -> Result<(InteractionTable, RemovalReport)> {
    let mut report = RemovalReport {
        threshold: t,
        single_pass,
        sweeps: 0,
        removed_compounds: Vec::new(),
        removed_targets: Vec::new(),
        records_before: table.len(),
        records_after: 0,
    };
    let mut current = table.clone();
    loop {
        report.sweeps += 1;
        let low_c: Vec<String> = current
            .compounds()
            .iter()
            .filter(|(_, r)| r.len() <= t)
            .map(|(id, _)| id.clone())
            .collect();
        let low_t: Vec<String> = current
            .targets()
            .iter()
            .filter(|(_, r)| r.len() <= t)
            .map(|(id, _)| id.clone())
            .collect();
        if low_c.is_empty() && low_t.is_empty() {
            break;
        }
        let keep: Vec<usize> = current
            .records()
            .iter()
            .enumerate()
            .filter(|(_, r)| low_c.binary_search(&r.compound_id).is_err() && low_t.binary_search(&r.target_id).is_err())
            .map(|(i, _)| i)
            .collect();
        report.removed_compounds.extend(low_c);
        report.removed_targets.extend(low_t);
        current = current.subset(&keep)?;
        if single_pass {
            break;
        }
    }
    // entities that lost all records to the other axis are removed too
    for id in table.compounds().keys() {
        if !current.compounds().contains_key(id) && !report.removed_compounds.contains(id) {
            report.removed_compounds.push(id.clone());
        }
    }
    for id in table.targets().keys() {
        if !current.targets().contains_key(id) && !report.removed_targets.contains(id) {
            report.removed_targets.push(id.clone());
        }
    }
    report.removed_compounds.sort();
    report.removed_targets.sort();
    report.records_after = current.len();
    if current.is_empty() && !table.is_empty() {
        log::warn!("filter threshold {t} removed every record");
    }
    Ok((current, report))
}
