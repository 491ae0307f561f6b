use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub compound_id: String,
    pub smiles: String,
    pub target_id: String,
    pub sequence: String,
    pub affinity: f64,
}

/// Column names of the five record fields in an input CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schema {
    pub compound_id: String,
    pub smiles: String,
    pub target_id: String,
    pub sequence: String,
    pub affinity: String,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            compound_id: "compound_id".into(),
            smiles: "smiles".into(),
            target_id: "target_id".into(),
            sequence: "sequence".into(),
            affinity: "affinity".into(),
        }
    }
}

/// Records plus compound and target indices (entity id to record positions).
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionTable {
    records: Vec<InteractionRecord>,
    compounds: BTreeMap<String, Vec<usize>>,
    targets: BTreeMap<String, Vec<usize>>,
    duplicate_pairs: usize,
}

impl InteractionTable {
    pub fn new(records: Vec<InteractionRecord>) -> Result<Self> {
        let mut compounds: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut targets: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut pairs = BTreeSet::new();
        let mut duplicate_pairs = 0;
        for (i, r) in records.iter().enumerate() {
            if r.compound_id.is_empty() || r.target_id.is_empty() {
                return Err(Error::Data(format!("record {i} has an empty id")));
            }
            if !r.affinity.is_finite() {
                return Err(Error::Data(format!(
                    "record {i} has non-finite affinity {}",
                    r.affinity
                )));
            }
            compounds.entry(r.compound_id.clone()).or_default().push(i);
            targets.entry(r.target_id.clone()).or_default().push(i);
            if !pairs.insert((r.compound_id.as_str(), r.target_id.as_str())) {
                duplicate_pairs += 1;
            }
        }
        Ok(Self {
            records,
            compounds,
            targets,
            duplicate_pairs,
        })
    }

    pub fn records(&self) -> &[InteractionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Compound id to the positions of its records, in id order.
    pub fn compounds(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.compounds
    }

    pub fn targets(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.targets
    }

    /// Number of records repeating an earlier (compound, target) pair.
    pub fn duplicate_pairs(&self) -> usize {
        self.duplicate_pairs
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| self.records[i].clone()).collect())
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.records {
            out.serialize(r)?;
        }
        out.flush().map_err(|e| Error::io("<table>", e))?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(f)
    }
}

/// Reads a headered CSV, mapping columns through `schema`.
pub fn read_table(r: impl Read, schema: &Schema) -> Result<InteractionTable> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Schema(format!("missing column {name:?}")))
    };
    let ci = column(&schema.compound_id)?;
    let si = column(&schema.smiles)?;
    let ti = column(&schema.target_id)?;
    let qi = column(&schema.sequence)?;
    let ai = column(&schema.affinity)?;
    let mut records = Vec::new();
    for (n, row) in rdr.records().enumerate() {
        // header is line 1
        let line = n + 2;
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or("").trim().to_string();
        let raw = field(ai);
        let affinity: f64 = raw
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::Data(format!("row {line}: unparseable affinity {raw:?}")))?;
        let record = InteractionRecord {
            compound_id: field(ci),
            smiles: field(si),
            target_id: field(ti),
            sequence: field(qi),
            affinity,
        };
        if record.compound_id.is_empty() || record.target_id.is_empty() {
            return Err(Error::Data(format!("row {line}: empty compound or target id")));
        }
        records.push(record);
    }
    let table = InteractionTable::new(records)?;
    if table.duplicate_pairs() > 0 {
        log::warn!(
            "{} duplicate (compound, target) pairs retained",
            table.duplicate_pairs()
        );
    }
    Ok(table)
}

pub fn load_table(path: &Path, schema: &Schema) -> Result<InteractionTable> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_table(std::io::BufReader::new(f), schema).map_err(|e| match e {
        Error::Schema(m) => Error::Schema(format!("{}: {m}", path.display())),
        Error::Data(m) => Error::Data(format!("{}: {m}", path.display())),
        other => other,
    })
}
