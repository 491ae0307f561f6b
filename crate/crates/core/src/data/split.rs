use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::table::InteractionTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitScheme {
    /// Records are split at random; entities recur across folds.
    Warm,
    /// Every compound's records share one fold.
    ColdDrug,
    /// Every target's records share one fold.
    ColdTarget,
}

impl SplitScheme {
    pub const ALL: [SplitScheme; 3] = [SplitScheme::Warm, SplitScheme::ColdDrug, SplitScheme::ColdTarget];

    pub fn name(self) -> &'static str {
        match self {
            SplitScheme::Warm => "warm",
            SplitScheme::ColdDrug => "cold_drug",
            SplitScheme::ColdTarget => "cold_target",
        }
    }
}

impl std::str::FromStr for SplitScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SplitScheme::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown split scheme {s:?}")))
    }
}

impl std::fmt::Display for SplitScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub scheme: SplitScheme,
    pub n_folds: usize,
    pub seed: u64,
    /// Fold label of each record, in table order.
    pub folds: Vec<usize>,
}

impl FoldAssignment {
    pub fn validation_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.folds.len()).filter(|&i| self.folds[i] == fold).collect()
    }

    pub fn training_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.folds.len()).filter(|&i| self.folds[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_folds];
        for &f in &self.folds {
            sizes[f] += 1;
        }
        sizes
    }

    /// Checks that the assignment was made for a table of this size.
    pub fn check_table(&self, table: &InteractionTable) -> Result<()> {
        if self.folds.len() != table.len() {
            return Err(Error::Data(format!(
                "fold assignment covers {} records but the table has {}",
                self.folds.len(),
                table.len()
            )));
        }
        if self.folds.iter().any(|&f| f >= self.n_folds) {
            return Err(Error::Data("fold label out of range".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Assigns every record of `table` to one of `n_folds` folds.
///
/// Warm: records are shuffled and dealt round-robin. Cold: the distinct
/// compounds (or targets), in id order, are shuffled and dealt round-robin
/// and each record inherits its entity's fold.
pub fn split(table: &InteractionTable, scheme: SplitScheme, n_folds: usize, seed: u64) -> Result<FoldAssignment> {
    if n_folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {n_folds}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; table.len()];
    match scheme {
        SplitScheme::Warm => {
            if table.len() < n_folds {
                return Err(Error::Data(format!(
                    "warm split needs at least {n_folds} records, table has {}",
                    table.len()
                )));
            }
            let mut order: Vec<usize> = (0..table.len()).collect();
            order.shuffle(&mut rng);
            for (pos, &i) in order.iter().enumerate() {
                folds[i] = pos % n_folds;
            }
        }
        SplitScheme::ColdDrug | SplitScheme::ColdTarget => {
            let index: &BTreeMap<String, Vec<usize>> = if scheme == SplitScheme::ColdDrug {
                table.compounds()
            } else {
                table.targets()
            };
            if index.len() < n_folds {
                let what = if scheme == SplitScheme::ColdDrug {
                    "compounds"
                } else {
                    "targets"
                };
                return Err(Error::Data(format!(
                    "{scheme} split needs at least {n_folds} distinct {what}, table has {}",
                    index.len()
                )));
            }
            let mut groups: Vec<&Vec<usize>> = index.values().collect();
            groups.shuffle(&mut rng);
            for (pos, records) in groups.iter().enumerate() {
                for &i in records.iter() {
                    folds[i] = pos % n_folds;
                }
            }
        }
    }
    Ok(FoldAssignment {
        scheme,
        n_folds,
        seed,
        folds,
    })
}
