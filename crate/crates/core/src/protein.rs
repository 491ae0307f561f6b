//! Protein sequence composition: amino-acid, dipeptide and tripeptide
//! frequencies concatenated into one 8420-wide vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard residues in alphabetical one-letter order.
pub const AMINO_ACIDS: [u8; 20] = *b"ACDEFGHIKLMNPQRSTVWY";
pub const AAC_LEN: usize = 20;
pub const DC_LEN: usize = 400;
pub const TC_LEN: usize = 8000;
pub const PSC_LEN: usize = AAC_LEN + DC_LEN + TC_LEN;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PscScale {
    #[default]
    Fraction,
    Percent,
}

impl PscScale {
    fn factor(self) -> f64 {
        match self {
            PscScale::Fraction => 1.0,
            PscScale::Percent => 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PscVector {
    values: Vec<f64>,
}

impl PscVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn aac(&self) -> &[f64] {
        &self.values[..AAC_LEN]
    }

    pub fn dc(&self) -> &[f64] {
        &self.values[AAC_LEN..AAC_LEN + DC_LEN]
    }

    pub fn tc(&self) -> &[f64] {
        &self.values[AAC_LEN + DC_LEN..]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        if values.len() != PSC_LEN {
            return Err(Error::Data(format!(
                "composition vector must have {PSC_LEN} entries, got {}",
                values.len()
            )));
        }
        Ok(Self { values })
    }
}

fn residue_index(b: u8) -> Option<usize> {
    AMINO_ACIDS.iter().position(|&a| a == b)
}

/// Maps a sequence to residue indices, rejecting anything outside the 20
/// standard letters.
fn encode(sequence: &str, min_len: usize) -> Result<Vec<usize>> {
    let mut bad = Vec::new();
    let idx: Vec<usize> = sequence
        .bytes()
        .enumerate()
        .filter_map(|(pos, b)| {
            let i = residue_index(b);
            if i.is_none() {
                bad.push(pos);
            }
            i
        })
        .collect();
    if !bad.is_empty() {
        let shown: Vec<String> = bad.iter().take(20).map(|p| p.to_string()).collect();
        return Err(Error::Sequence(format!(
            "non-standard residues at positions [{}]{}",
            shown.join(", "),
            if bad.len() > 20 { ", ..." } else { "" }
        )));
    }
    if idx.len() < min_len.max(1) {
        return Err(Error::Sequence(format!(
            "sequence length {} is below the required {}",
            idx.len(),
            min_len.max(1)
        )));
    }
    Ok(idx)
}

fn ngram_frequencies(idx: &[usize], n: usize, scale: f64) -> Vec<f64> {
    let mut counts = vec![0u64; 20usize.pow(n as u32)];
    for w in idx.windows(n) {
        let code = w.iter().fold(0, |acc, &r| acc * 20 + r);
        counts[code] += 1;
    }
    let total = (idx.len() + 1 - n) as f64;
    counts.into_iter().map(|c| c as f64 / total * scale).collect()
}

/// Amino-acid composition: residue counts over sequence length.
pub fn aac(sequence: &str) -> Result<Vec<f64>> {
    aac_scaled(sequence, PscScale::Fraction)
}

/// Adjacent dipeptide counts over `N - 1`, pairs in lexicographic order.
pub fn dc(sequence: &str) -> Result<Vec<f64>> {
    dc_scaled(sequence, PscScale::Fraction)
}

/// Adjacent tripeptide counts over `N - 2`, triples in lexicographic order.
pub fn tc(sequence: &str) -> Result<Vec<f64>> {
    tc_scaled(sequence, PscScale::Fraction)
}

pub fn aac_scaled(sequence: &str, scale: PscScale) -> Result<Vec<f64>> {
    Ok(ngram_frequencies(&encode(sequence, 1)?, 1, scale.factor()))
}

pub fn dc_scaled(sequence: &str, scale: PscScale) -> Result<Vec<f64>> {
    Ok(ngram_frequencies(&encode(sequence, 2)?, 2, scale.factor()))
}

pub fn tc_scaled(sequence: &str, scale: PscScale) -> Result<Vec<f64>> {
    Ok(ngram_frequencies(&encode(sequence, 3)?, 3, scale.factor()))
}

/// Concatenated `[aac, dc, tc]` composition.
pub fn psc(sequence: &str) -> Result<PscVector> {
    psc_scaled(sequence, PscScale::Fraction)
}

pub fn psc_scaled(sequence: &str, scale: PscScale) -> Result<PscVector> {
    let idx = encode(sequence, 3)?;
    let f = scale.factor();
    let mut values = Vec::with_capacity(PSC_LEN);
    values.extend(ngram_frequencies(&idx, 1, f));
    values.extend(ngram_frequencies(&idx, 2, f));
    values.extend(ngram_frequencies(&idx, 3, f));
    Ok(PscVector { values })
}
