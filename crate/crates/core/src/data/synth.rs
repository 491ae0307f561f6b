use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::table::{InteractionRecord, InteractionTable};
use crate::chem::parse_smiles;
use crate::error::{Error, Result};
use crate::fingerprint::ecfp;
use crate::protein::{aac, AMINO_ACIDS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthMode {
    /// Affinity is a fixed linear function of the compound's ECFP8/1024 bits
    /// and the target's amino-acid composition.
    Linear,
    /// Affinity is a sum of hidden per-compound and per-target effects plus a
    /// low-rank interaction; the effects are not recoverable from features.
    Latent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_compounds: usize,
    pub n_targets: usize,
    /// Records to emit; capped at `n_compounds * n_targets` distinct pairs.
    pub n_records: usize,
    pub mode: SynthMode,
    /// Standard deviation of additive Gaussian label noise.
    pub noise: f64,
    pub min_sequence_len: usize,
    pub max_sequence_len: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_compounds: 25,
            n_targets: 20,
            n_records: 500,
            mode: SynthMode::Latent,
            noise: 0.1,
            min_sequence_len: 40,
            max_sequence_len: 80,
            seed: 0,
        }
    }
}

const FRAGMENTS: &[&str] = &[
    "C",
    "C",
    "C",
    "CC",
    "N",
    "O",
    "S",
    "c1ccccc1",
    "c1ccncc1",
    "C1CCCCC1",
    "C1CCNC1",
    "C(=O)",
    "C(=O)N",
    "C(F)",
    "C(Cl)",
    "N(C)",
    "C(C)(C)",
    "c1ccc(O)cc1",
    "C#C",
    "C=C",
];
const CAPS: &[&str] = &["", "", "F", "Cl", "Br", "O", "N", "C(=O)O", "C#N"];

fn random_smiles_string(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(2..=7);
    let mut s = String::new();
    for _ in 0..n {
        s.push_str(FRAGMENTS.choose(rng).expect("non-empty"));
    }
    s.push_str(CAPS.choose(rng).expect("non-empty"));
    s
}

fn random_sequence(rng: &mut ChaCha8Rng, min: usize, max: usize) -> String {
    let len = rng.gen_range(min..=max);
    (0..len)
        .map(|_| *AMINO_ACIDS.choose(rng).expect("non-empty") as char)
        .collect()
}

/// Generates a reproducible interaction table with distinct, parseable
/// compounds (distinct fingerprints) and random protein sequences.
pub fn synth_table(cfg: &SynthConfig) -> Result<InteractionTable> {
    if cfg.n_compounds == 0 || cfg.n_targets == 0 || cfg.n_records == 0 {
        return Err(Error::Config(
            "synthetic table needs compounds, targets and records".into(),
        ));
    }
    if cfg.min_sequence_len < 3 || cfg.min_sequence_len > cfg.max_sequence_len {
        return Err(Error::Config(
            "sequence length range must satisfy 3 <= min <= max".into(),
        ));
    }
    if !(cfg.noise >= 0.0 && cfg.noise.is_finite()) {
        return Err(Error::Config("noise must be finite and non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");

    let mut smiles = Vec::with_capacity(cfg.n_compounds);
    let mut fps = Vec::with_capacity(cfg.n_compounds);
    let mut seen = BTreeSet::new();
    let mut attempts = 0;
    while smiles.len() < cfg.n_compounds {
        attempts += 1;
        if attempts > 1000 * cfg.n_compounds {
            return Err(Error::Config("could not generate enough distinct compounds".into()));
        }
        let s = random_smiles_string(&mut rng);
        let graph = parse_smiles(&s).map_err(|source| Error::Smiles {
            smiles: s.clone(),
            source,
        })?;
        let fp = ecfp(&graph, 8, 1024)?;
        if seen.insert(fp.to_hex()) {
            smiles.push(s);
            fps.push(fp);
        }
    }
    let sequences: Vec<String> = (0..cfg.n_targets)
        .map(|_| random_sequence(&mut rng, cfg.min_sequence_len, cfg.max_sequence_len))
        .collect();

    let (compound_effect, target_effect): (Vec<f64>, Vec<f64>) = match cfg.mode {
        SynthMode::Linear => {
            let w: Vec<f64> = (0..1024).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let z: Vec<f64> = (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let ce = fps
                .iter()
                .map(|fp| 0.3 * fp.ones().map(|b| w[b]).sum::<f64>())
                .collect();
            let te = sequences
                .iter()
                .map(|s| {
                    let a = aac(s).expect("generated sequence is valid");
                    4.0 * a.iter().zip(&z).map(|(x, y)| x * y).sum::<f64>()
                })
                .collect();
            (ce, te)
        }
        SynthMode::Latent => (
            (0..cfg.n_compounds).map(|_| std_normal.sample(&mut rng)).collect(),
            (0..cfg.n_targets).map(|_| std_normal.sample(&mut rng)).collect(),
        ),
    };
    let rank = 2;
    let (p, q): (Vec<f64>, Vec<f64>) = match cfg.mode {
        SynthMode::Linear => (vec![0.0; cfg.n_compounds * rank], vec![0.0; cfg.n_targets * rank]),
        SynthMode::Latent => (
            (0..cfg.n_compounds * rank)
                .map(|_| 0.5 * std_normal.sample(&mut rng))
                .collect(),
            (0..cfg.n_targets * rank)
                .map(|_| 0.5 * std_normal.sample(&mut rng))
                .collect(),
        ),
    };

    let mut pairs: Vec<(usize, usize)> = (0..cfg.n_compounds)
        .flat_map(|c| (0..cfg.n_targets).map(move |t| (c, t)))
        .collect();
    if cfg.n_records < pairs.len() {
        pairs.shuffle(&mut rng);
        pairs.truncate(cfg.n_records);
        pairs.sort_unstable();
    }
    let records = pairs
        .into_iter()
        .map(|(c, t)| {
            let inter: f64 = (0..rank).map(|r| p[c * rank + r] * q[t * rank + r]).sum();
            let noise = if cfg.noise > 0.0 {
                cfg.noise * std_normal.sample(&mut rng)
            } else {
                0.0
            };
            InteractionRecord {
                compound_id: format!("cmp{c:04}"),
                smiles: smiles[c].clone(),
                target_id: format!("tgt{t:04}"),
                sequence: sequences[t].clone(),
                affinity: 6.0 + compound_effect[c] + target_effect[t] + inter + noise,
            }
        })
        .collect();
    InteractionTable::new(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_sized() {
        let cfg = SynthConfig {
            n_compounds: 5,
            n_targets: 10,
            n_records: 50,
            ..SynthConfig::default()
        };
        let a = synth_table(&cfg).unwrap();
        assert_eq!(a, synth_table(&cfg).unwrap());
        assert_eq!(a.len(), 50);
        assert_eq!(a.compounds().len(), 5);
        assert_eq!(a.targets().len(), 10);
        assert_eq!(a.duplicate_pairs(), 0);
    }

    #[test]
    fn subsampled_pairs() {
        let cfg = SynthConfig {
            n_compounds: 10,
            n_targets: 10,
            n_records: 30,
            mode: SynthMode::Linear,
            noise: 0.0,
            ..SynthConfig::default()
        };
        let t = synth_table(&cfg).unwrap();
        assert_eq!(t.len(), 30);
        assert!(t.records().iter().all(|r| r.affinity.is_finite()));
        for r in t.records() {
            assert!(parse_smiles(&r.smiles).is_ok());
            assert!((40..=80).contains(&r.sequence.len()));
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert!(synth_table(&SynthConfig {
            n_records: 0,
            ..SynthConfig::default()
        })
        .is_err());
        assert!(synth_table(&SynthConfig {
            min_sequence_len: 90,
            ..SynthConfig::default()
        })
        .is_err());
    }
}
