//! Extended-connectivity fingerprints.
//!
//! Iteration 0 assigns every atom its [`atom_invariant`]. Each later
//! iteration rehashes an atom's code together with the sorted
//! `(bond order, neighbor code)` pairs from the previous iteration, so after
//! `r` iterations a code describes the radius-`r` environment of its atom.
//! Environments covering an atom set that was already emitted are dropped,
//! as are repeated codes. The remaining codes are folded into a fixed-length
//! bit vector.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::chem::{atom_invariant, MolGraph};
use crate::error::{Error, Result};
use crate::hash::StableHasher;

pub const DEFAULT_DIAMETER: u32 = 8;
pub const DEFAULT_BITS: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubstructureId {
    pub code: u64,
    pub radius: u32,
    /// Sorted atom indices covered by the environment.
    pub atoms: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EcfpConfig {
    /// Even environment diameter; ECFP8 is diameter 8, radius 4.
    pub diameter: u32,
    pub n_bits: usize,
}

impl Default for EcfpConfig {
    fn default() -> Self {
        Self {
            diameter: DEFAULT_DIAMETER,
            n_bits: DEFAULT_BITS,
        }
    }
}

impl EcfpConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.diameter.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "ECFP diameter must be even, got {}",
                self.diameter
            )));
        }
        check_bits(self.n_bits)
    }

    pub fn radius(&self) -> u32 {
        self.diameter / 2
    }
}

fn check_bits(n_bits: usize) -> Result<()> {
    if n_bits < 64 || !n_bits.is_power_of_two() {
        return Err(Error::Config(format!(
            "fingerprint length must be a power of two >= 64, got {n_bits}"
        )));
    }
    Ok(())
}

/// A folded binary fingerprint.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FingerprintVector {
    words: Vec<u64>,
    n_bits: usize,
    /// Diameter the identifiers were generated with; 0 when folded from a
    /// caller-supplied identifier list.
    pub diameter: u32,
}

impl FingerprintVector {
    pub fn zeros(n_bits: usize) -> Result<Self> {
        check_bits(n_bits)?;
        Ok(Self {
            words: vec![0; n_bits / 64],
            n_bits,
            diameter: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.n_bits
    }

    pub fn is_empty(&self) -> bool {
        self.n_bits == 0
    }

    pub fn get(&self, bit: usize) -> bool {
        bit < self.n_bits && (self.words[bit / 64] >> (bit % 64)) & 1 == 1
    }

    fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn popcount(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_bits).filter(|&b| self.get(b))
    }

    /// Bits as 0.0 / 1.0 values.
    pub fn to_f64(&self) -> Vec<f64> {
        (0..self.n_bits).map(|b| if self.get(b) { 1.0 } else { 0.0 }).collect()
    }

    /// Hex encoding: byte `i` holds bits `8i..8i+8`, least significant first.
    pub fn to_hex(&self) -> String {
        let bytes: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        hex::encode(bytes)
    }

    pub fn from_hex(s: &str, diameter: u32) -> Result<Self> {
        let bytes = hex::decode(s).map_err(|e| Error::Data(format!("bad fingerprint hex: {e}")))?;
        let n_bits = bytes.len() * 8;
        check_bits(n_bits)?;
        let words = bytes
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(Self {
            words,
            n_bits,
            diameter,
        })
    }
}

/// Enumerates ECFP substructure identifiers up to `radius` iterations.
///
/// Output is sorted by `(radius, code)` and contains each code once.
pub fn ecfp_identifiers(graph: &MolGraph, radius: u32) -> Vec<SubstructureId> {
    let n = graph.atom_count();
    let mut codes: Vec<u64> = (0..n).map(|i| atom_invariant(graph, i)).collect();
    let mut sets: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();

    let mut seen_sets: HashSet<Vec<usize>> = HashSet::new();
    let mut emitted: Vec<SubstructureId> = Vec::new();
    let mut emit_round = |round: u32, codes: &[u64], sets: &[Vec<usize>], emitted: &mut Vec<SubstructureId>| {
        // identical atom sets within one round keep the smaller code
        let mut fresh: BTreeMap<&Vec<usize>, u64> = BTreeMap::new();
        for (set, &code) in sets.iter().zip(codes) {
            if seen_sets.contains(set) {
                continue;
            }
            fresh.entry(set).and_modify(|c| *c = (*c).min(code)).or_insert(code);
        }
        for (set, code) in fresh {
            seen_sets.insert(set.clone());
            emitted.push(SubstructureId {
                code,
                radius: round,
                atoms: set.clone(),
            });
        }
    };
    emit_round(0, &codes, &sets, &mut emitted);

    for round in 1..=radius {
        let mut next_codes = Vec::with_capacity(n);
        let mut next_sets = Vec::with_capacity(n);
        for v in 0..n {
            let mut env: Vec<(u64, u64)> = graph
                .neighbors(v)
                .iter()
                .map(|&(u, bi)| (graph.bonds()[bi].order.code(), codes[u]))
                .collect();
            env.sort_unstable();
            let mut h = StableHasher::new();
            h.write_u64(u64::from(round));
            h.write_u64(codes[v]);
            for (bond, code) in &env {
                h.write_u64(*bond);
                h.write_u64(*code);
            }
            next_codes.push(h.finish());

            let mut set = sets[v].clone();
            for &(u, _) in graph.neighbors(v) {
                set.extend_from_slice(&sets[u]);
            }
            set.sort_unstable();
            set.dedup();
            next_sets.push(set);
        }
        let grew = next_sets.iter().zip(&sets).any(|(a, b)| a.len() != b.len());
        codes = next_codes;
        sets = next_sets;
        if !grew {
            break;
        }
        emit_round(round, &codes, &sets, &mut emitted);
    }

    emitted.sort_by(|a, b| (a.radius, a.code, &a.atoms).cmp(&(b.radius, b.code, &b.atoms)));
    let mut codes_seen = HashSet::new();
    emitted.retain(|id| codes_seen.insert(id.code));
    emitted
}

/// Folds identifiers into an `n_bits` vector by `code mod n_bits`.
pub fn fold(identifiers: &[SubstructureId], n_bits: usize) -> Result<FingerprintVector> {
    let mut fp = FingerprintVector::zeros(n_bits)?;
    for id in identifiers {
        fp.set((id.code % n_bits as u64) as usize);
    }
    Ok(fp)
}

/// ECFP of the given diameter folded to `n_bits`.
pub fn ecfp(graph: &MolGraph, diameter: u32, n_bits: usize) -> Result<FingerprintVector> {
    let config = EcfpConfig { diameter, n_bits };
    config.validate()?;
    let mut fp = fold(&ecfp_identifiers(graph, config.radius()), n_bits)?;
    fp.diameter = diameter;
    Ok(fp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::{parse_smiles, random_smiles};
    use proptest::prelude::*;

    fn mol(s: &str) -> MolGraph {
        parse_smiles(s).unwrap()
    }

    fn code_multiset(ids: &[SubstructureId]) -> Vec<(u32, u64)> {
        let mut v: Vec<_> = ids.iter().map(|i| (i.radius, i.code)).collect();
        v.sort_unstable();
        v
    }

    /// Independent enumeration of distinct environments: every
    /// (center, radius) pair is described by the BFS shells around the
    /// center, each shell a sorted list of atom invariant tuples plus the
    /// bond orders linking it inward. Distinct descriptions approximate
    /// distinct identifiers; atom sets already covered are skipped.
    fn brute_force_environment_count(g: &MolGraph, radius: u32) -> usize {
        use std::collections::BTreeSet;
        let n = g.atom_count();
        let mut seen_sets: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut descriptions = BTreeSet::new();
        for r in 0..=radius {
            let mut round: BTreeMap<Vec<usize>, String> = BTreeMap::new();
            for c in 0..n {
                let mut dist = vec![usize::MAX; n];
                dist[c] = 0;
                let mut queue = std::collections::VecDeque::from([c]);
                while let Some(v) = queue.pop_front() {
                    for &(u, _) in g.neighbors(v) {
                        if dist[u] == usize::MAX {
                            dist[u] = dist[v] + 1;
                            queue.push_back(u);
                        }
                    }
                }
                let set: Vec<usize> = (0..n).filter(|&v| dist[v] <= r as usize).collect();
                let desc = format!(
                    "{r}:{:?}",
                    (0..=r as usize)
                        .map(|d| {
                            let mut shell: Vec<_> = (0..n)
                                .filter(|&v| dist[v] == d)
                                .map(|v| {
                                    let a = &g.atoms()[v];
                                    (a.element, a.degree, a.total_h(), a.aromatic, a.in_ring)
                                })
                                .collect();
                            shell.sort_unstable();
                            shell
                        })
                        .collect::<Vec<_>>()
                );
                round.entry(set).or_insert(desc);
            }
            for (set, desc) in round {
                if seen_sets.insert(set) {
                    descriptions.insert(desc);
                }
            }
        }
        descriptions.len()
    }

    #[test]
    fn isolated_atom_has_one_identifier() {
        let ids = ecfp_identifiers(&mol("C"), 4);
        assert_eq!(ids.len(), 1);
        assert_eq!(ids[0].radius, 0);
        assert_eq!(ecfp(&mol("C"), 8, 1024).unwrap().popcount(), 1);
    }

    #[test]
    fn ethanol_radius_one() {
        let g = mol("CCO");
        let ids = ecfp_identifiers(&g, 1);
        assert_eq!(ids.iter().filter(|i| i.radius == 0).count(), 3);
        assert_eq!(ids.iter().filter(|i| i.radius == 1).count(), 3);
        assert_eq!(ids.len(), brute_force_environment_count(&g, 1));
        assert_ne!(atom_invariant(&g, 0), atom_invariant(&g, 1));
    }

    #[test]
    fn identifier_counts_match_brute_force_enumeration() {
        for s in ["CCO", "CCCC", "CC(C)C", "c1ccccc1", "CC(=O)O", "C1CCCCC1", "CCN(CC)CC"] {
            let g = mol(s);
            for r in 0..=3 {
                assert_eq!(
                    ecfp_identifiers(&g, r).len(),
                    brute_force_environment_count(&g, r),
                    "{s} radius {r}"
                );
            }
        }
    }

    #[test]
    fn order_invariance() {
        let a = ecfp_identifiers(&mol("CCO"), 4);
        let b = ecfp_identifiers(&mol("OCC"), 4);
        assert_eq!(code_multiset(&a), code_multiset(&b));
        assert_eq!(ecfp(&mol("CCO"), 8, 1024).unwrap(), ecfp(&mol("OCC"), 8, 1024).unwrap());
    }

    #[test]
    fn fold_basics() {
        assert_eq!(fold(&[], 1024).unwrap().popcount(), 0);
        let one = SubstructureId {
            code: 12345,
            radius: 0,
            atoms: vec![0],
        };
        assert_eq!(fold(std::slice::from_ref(&one), 1024).unwrap().popcount(), 1);
        assert_eq!(fold(&[one.clone(), one.clone()], 1024).unwrap().popcount(), 1);
        assert!(matches!(fold(&[], 1000), Err(Error::Config(_))));
        assert!(matches!(fold(&[], 32), Err(Error::Config(_))));
    }

    #[test]
    fn wider_fold_never_loses_bits() {
        let ids = ecfp_identifiers(&mol("c1ccccc1"), 4);
        let narrow = fold(&ids, 1024).unwrap().popcount();
        let wide = fold(&ids, 2048).unwrap().popcount();
        assert!(narrow <= wide);
    }

    #[test]
    fn aromatic_ring_differs_from_aliphatic() {
        assert_ne!(
            ecfp(&mol("c1ccccc1"), 8, 1024).unwrap(),
            ecfp(&mol("C1CCCCC1"), 8, 1024).unwrap()
        );
    }

    #[test]
    fn odd_diameter_rejected() {
        assert!(matches!(ecfp(&mol("CC"), 7, 1024), Err(Error::Config(_))));
    }

    #[test]
    fn isolated_atoms_one_identifier_per_invariant() {
        let g = mol("C.C.O.[Na+]");
        assert_eq!(ecfp_identifiers(&g, 4).len(), 3);
    }

    #[test]
    fn radius_prefix_is_stable() {
        let g = mol("CC(=O)Nc1ccc(O)cc1");
        for r in 0..4 {
            let small: HashSet<u64> = ecfp_identifiers(&g, r).iter().map(|i| i.code).collect();
            let big: HashSet<u64> = ecfp_identifiers(&g, r + 1).iter().map(|i| i.code).collect();
            assert!(small.is_subset(&big));
        }
    }

    #[test]
    fn hex_round_trip() {
        let fp = ecfp(&mol("CC(=O)Oc1ccccc1C(=O)O"), 8, 256).unwrap();
        let back = FingerprintVector::from_hex(&fp.to_hex(), 8).unwrap();
        assert_eq!(back, fp);
        assert_eq!(fp.to_hex().len(), 64);
    }

    proptest! {
        #[test]
        fn rewrites_give_identical_fingerprints(seed in any::<u64>(), which in 0usize..5) {
            let s = ["CC(=O)Oc1ccccc1C(=O)O", "CN1CCC[C@H]1c1cccnc1", "O=C(O)CCc1ccccc1",
                     "c1ccc2[nH]ccc2c1", "CC(C)Cc1ccc(C(C)C(=O)O)cc1"][which];
            let g = mol(s);
            let h = mol(&random_smiles(&g, seed));
            prop_assert_eq!(ecfp(&g, 8, 1024).unwrap(), ecfp(&h, 8, 1024).unwrap());
        }
    }
}
