use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::table::InteractionTable;
use crate::chem::{parse_smiles, MolGraph};
use crate::error::{Error, Result};
use crate::fingerprint::{ecfp, EcfpConfig, FingerprintVector};
use crate::protein::{psc_scaled, PscScale, PscVector};

const CACHE_FORMAT: u32 = 1;
const MANIFEST: &str = "manifest.json";
const COMPOUNDS: &str = "compounds.csv";
const TARGETS: &str = "targets.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturizeConfig {
    pub diameter: u32,
    pub n_bits: usize,
    pub psc_scale: PscScale,
}

impl Default for FeaturizeConfig {
    fn default() -> Self {
        let e = EcfpConfig::default();
        Self {
            diameter: e.diameter,
            n_bits: e.n_bits,
            psc_scale: PscScale::default(),
        }
    }
}

impl FeaturizeConfig {
    pub fn ecfp(&self) -> EcfpConfig {
        EcfpConfig {
            diameter: self.diameter,
            n_bits: self.n_bits,
        }
    }

    /// Hex SHA-256 of the cache format and the configuration.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut h = Sha256::new();
        h.update(format!("dti-feature-cache/{CACHE_FORMAT}\n{json}"));
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompoundFeatures {
    pub smiles: String,
    pub graph: MolGraph,
    pub fingerprint: FingerprintVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetFeatures {
    pub sequence: String,
    pub psc: PscVector,
}

/// Per-entity features keyed by id, plus entities that failed to featurize.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureCache {
    pub config: FeaturizeConfig,
    pub compounds: BTreeMap<String, CompoundFeatures>,
    pub targets: BTreeMap<String, TargetFeatures>,
    /// id to (input string, failure reason)
    pub bad_compounds: BTreeMap<String, (String, String)>,
    pub bad_targets: BTreeMap<String, (String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BadRecord {
    /// Zero-based record index in the input table.
    pub record: usize,
    pub compound_id: String,
    pub target_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct FeaturizeReport {
    pub config_hash: String,
    pub compounds: usize,
    pub targets: usize,
    pub computed_compounds: usize,
    pub computed_targets: usize,
    pub cache_hit: bool,
    pub bad_records: Vec<BadRecord>,
    pub kept_records: usize,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: u32,
    config_hash: String,
    config: FeaturizeConfig,
    compounds: usize,
    targets: usize,
    bad_compounds: BTreeMap<String, (String, String)>,
    bad_targets: BTreeMap<String, (String, String)>,
}

fn compound_features(smiles: &str, config: &FeaturizeConfig) -> Result<CompoundFeatures> {
    let graph = parse_smiles(smiles).map_err(|source| Error::Smiles {
        smiles: smiles.to_string(),
        source,
    })?;
    let fingerprint = ecfp(&graph, config.diameter, config.n_bits)?;
    Ok(CompoundFeatures {
        smiles: smiles.to_string(),
        graph,
        fingerprint,
    })
}

impl FeatureCache {
    pub fn new(config: FeaturizeConfig) -> Self {
        Self {
            config,
            ..Self::default()
        }
    }

    /// Featurizes every entity of `table` not already present with the same
    /// input string. Returns (compounds computed, targets computed).
    fn fill(&mut self, table: &InteractionTable) -> (usize, usize) {
        let (mut nc, mut nt) = (0, 0);
        for (id, rows) in table.compounds() {
            let smiles = &table.records()[rows[0]].smiles;
            let known = self.compounds.get(id).is_some_and(|c| &c.smiles == smiles)
                || self.bad_compounds.get(id).is_some_and(|(s, _)| s == smiles);
            if known {
                continue;
            }
            nc += 1;
            self.compounds.remove(id);
            self.bad_compounds.remove(id);
            match compound_features(smiles, &self.config) {
                Ok(f) => {
                    self.compounds.insert(id.clone(), f);
                }
                Err(e) => {
                    self.bad_compounds.insert(id.clone(), (smiles.clone(), e.to_string()));
                }
            }
        }
        for (id, rows) in table.targets() {
            let seq = &table.records()[rows[0]].sequence;
            let known = self.targets.get(id).is_some_and(|t| &t.sequence == seq)
                || self.bad_targets.get(id).is_some_and(|(s, _)| s == seq);
            if known {
                continue;
            }
            nt += 1;
            self.targets.remove(id);
            self.bad_targets.remove(id);
            match psc_scaled(seq, self.config.psc_scale) {
                Ok(psc) => {
                    self.targets.insert(
                        id.clone(),
                        TargetFeatures {
                            sequence: seq.clone(),
                            psc,
                        },
                    );
                }
                Err(e) => {
                    self.bad_targets.insert(id.clone(), (seq.clone(), e.to_string()));
                }
            }
        }
        (nc, nt)
    }

    /// Records whose compound or target could not be featurized, or whose
    /// input string disagrees with the entity's first record.
    fn bad_records(&self, table: &InteractionTable) -> Vec<BadRecord> {
        let mut bad = Vec::new();
        for (i, r) in table.records().iter().enumerate() {
            let reason = if let Some((_, why)) = self.bad_compounds.get(&r.compound_id) {
                Some(format!("compound {}: {why}", r.compound_id))
            } else if let Some((_, why)) = self.bad_targets.get(&r.target_id) {
                Some(format!("target {}: {why}", r.target_id))
            } else if self.compounds.get(&r.compound_id).is_some_and(|c| c.smiles != r.smiles) {
                Some(format!("compound {} has conflicting SMILES", r.compound_id))
            } else if self.targets.get(&r.target_id).is_some_and(|t| t.sequence != r.sequence) {
                Some(format!("target {} has conflicting sequences", r.target_id))
            } else {
                None
            };
            if let Some(reason) = reason {
                bad.push(BadRecord {
                    record: i,
                    compound_id: r.compound_id.clone(),
                    target_id: r.target_id.clone(),
                    reason,
                });
            }
        }
        bad
    }

    /// Restricts `table` to records usable with this cache. Entities absent
    /// from the cache (neither featurized nor recorded as failures) are an
    /// error; unusable records are an error unless `skip_bad` is set.
    pub fn select(&self, table: &InteractionTable, skip_bad: bool) -> Result<(InteractionTable, Vec<BadRecord>)> {
        let missing = table
            .compounds()
            .keys()
            .find(|id| !self.compounds.contains_key(*id) && !self.bad_compounds.contains_key(*id))
            .map(|id| format!("compound {id}"))
            .or_else(|| {
                table
                    .targets()
                    .keys()
                    .find(|id| !self.targets.contains_key(*id) && !self.bad_targets.contains_key(*id))
                    .map(|id| format!("target {id}"))
            });
        if let Some(what) = missing {
            return Err(Error::Data(format!(
                "{what} is not in the feature cache; run featurize again"
            )));
        }
        let (kept, report) = finish(self, table, (0, 0), skip_bad)?;
        Ok((kept, report.bad_records))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut w = csv::Writer::from_path(dir.join(COMPOUNDS))?;
        w.write_record(["id", "smiles", "ecfp_hex"])?;
        for (id, c) in &self.compounds {
            w.write_record([id.as_str(), &c.smiles, &c.fingerprint.to_hex()])?;
        }
        w.flush().map_err(|e| Error::io(dir.join(COMPOUNDS), e))?;

        let mut w = csv::Writer::from_path(dir.join(TARGETS))?;
        let mut header = vec!["id".to_string(), "sequence".to_string()];
        header.extend((0..crate::protein::PSC_LEN).map(|i| format!("psc{i}")));
        w.write_record(&header)?;
        for (id, t) in &self.targets {
            let mut row = vec![id.clone(), t.sequence.clone()];
            row.extend(t.psc.as_slice().iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(dir.join(TARGETS), e))?;

        // manifest last so an interrupted write never looks complete
        let manifest = Manifest {
            format: CACHE_FORMAT,
            config_hash: self.config.content_hash(),
            config: self.config,
            compounds: self.compounds.len(),
            targets: self.targets.len(),
            bad_compounds: self.bad_compounds.clone(),
            bad_targets: self.bad_targets.clone(),
        };
        let path = dir.join(MANIFEST);
        let mut json = serde_json::to_string_pretty(&manifest)?;
        json.push('\n');
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))
    }

    /// Loads a cache directory. Returns `None` when it is absent or was built
    /// with a different configuration.
    pub fn load(dir: &Path, config: &FeaturizeConfig) -> Result<Option<Self>> {
        let path = dir.join(MANIFEST);
        let Ok(text) = std::fs::read_to_string(&path) else {
            return Ok(None);
        };
        let manifest: Manifest = match serde_json::from_str(&text) {
            Ok(m) => m,
            Err(e) => {
                log::warn!("ignoring unreadable cache manifest {}: {e}", path.display());
                return Ok(None);
            }
        };
        if manifest.format != CACHE_FORMAT || manifest.config_hash != config.content_hash() {
            log::info!("feature cache at {} is stale", dir.display());
            return Ok(None);
        }
        let mut cache = FeatureCache::new(*config);
        cache.bad_compounds = manifest.bad_compounds;
        cache.bad_targets = manifest.bad_targets;

        let mut rdr = csv::Reader::from_path(dir.join(COMPOUNDS))?;
        for row in rdr.records() {
            let row = row?;
            let (id, smiles, hex) = (&row[0], &row[1], &row[2]);
            let graph = parse_smiles(smiles).map_err(|source| Error::Smiles {
                smiles: smiles.to_string(),
                source,
            })?;
            let fingerprint = FingerprintVector::from_hex(hex, config.diameter)?;
            if fingerprint.len() != config.n_bits {
                return Err(Error::Data(format!("cached fingerprint for {id} has the wrong length")));
            }
            cache.compounds.insert(
                id.to_string(),
                CompoundFeatures {
                    smiles: smiles.to_string(),
                    graph,
                    fingerprint,
                },
            );
        }
        let mut rdr = csv::Reader::from_path(dir.join(TARGETS))?;
        for row in rdr.records() {
            let row = row?;
            let values = row
                .iter()
                .skip(2)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::Data(format!("bad cached value {v:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            cache.targets.insert(
                row[0].to_string(),
                TargetFeatures {
                    sequence: row[1].to_string(),
                    psc: PscVector::from_vec(values)?,
                },
            );
        }
        if cache.compounds.len() != manifest.compounds || cache.targets.len() != manifest.targets {
            return Err(Error::Data(format!("feature cache at {} is incomplete", dir.display())));
        }
        Ok(Some(cache))
    }
}

fn finish(
    cache: &FeatureCache,
    table: &InteractionTable,
    computed: (usize, usize),
    skip_bad: bool,
) -> Result<(InteractionTable, FeaturizeReport)> {
    let bad = cache.bad_records(table);
    if !bad.is_empty() && !skip_bad {
        let first = &bad[0];
        return Err(Error::Data(format!(
            "{} records could not be featurized (first: record {}: {}); rerun with --skip-bad to drop them",
            bad.len(),
            first.record,
            first.reason
        )));
    }
    let keep: Vec<usize> = {
        let mut drop = bad.iter().map(|b| b.record).peekable();
        (0..table.len())
            .filter(|&i| {
                if drop.peek() == Some(&i) {
                    drop.next();
                    false
                } else {
                    true
                }
            })
            .collect()
    };
    let kept = table.subset(&keep)?;
    let report = FeaturizeReport {
        config_hash: cache.config.content_hash(),
        compounds: kept.compounds().len(),
        targets: kept.targets().len(),
        computed_compounds: computed.0,
        computed_targets: computed.1,
        cache_hit: computed == (0, 0),
        bad_records: bad,
        kept_records: kept.len(),
    };
    Ok((kept, report))
}

/// Featurizes each distinct compound and target of `table` once. Fails when
/// any record is unusable unless `skip_bad` is set, in which case those
/// records are dropped from the returned table and listed in the report.
pub fn featurize_table(
    table: &InteractionTable,
    config: &FeaturizeConfig,
    skip_bad: bool,
) -> Result<(FeatureCache, InteractionTable, FeaturizeReport)> {
    config.ecfp().validate()?;
    let mut cache = FeatureCache::new(*config);
    let computed = cache.fill(table);
    let (kept, report) = finish(&cache, table, computed, skip_bad)?;
    Ok((cache, kept, report))
}

/// Like [`featurize_table`], reusing and updating the cache stored in `dir`.
pub fn featurize_cached(
    table: &InteractionTable,
    config: &FeaturizeConfig,
    dir: &Path,
    skip_bad: bool,
) -> Result<(FeatureCache, InteractionTable, FeaturizeReport)> {
    config.ecfp().validate()?;
    let mut cache = FeatureCache::load(dir, config)?.unwrap_or_else(|| FeatureCache::new(*config));
    let computed = cache.fill(table);
    if computed != (0, 0) {
        cache.save(dir)?;
    }
    let (kept, report) = finish(&cache, table, computed, skip_bad)?;
    Ok((cache, kept, report))
}
