//! Molecular graphs parsed from SMILES.

pub mod elements;
mod smiles;
mod writer;

use serde::{Deserialize, Serialize};

use crate::hash::StableHasher;

pub use smiles::{parse_smiles, SmilesError, SmilesErrorKind};
pub use writer::{random_smiles, write_smiles};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to the valence sum, in half-bond units.
    fn half_units(self) -> u32 {
        match self {
            BondOrder::Single => 2,
            BondOrder::Double => 4,
            BondOrder::Triple => 6,
            BondOrder::Aromatic => 3,
        }
    }

    /// Small integer code used in neighborhood hashing.
    pub fn code(self) -> u64 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub element: u8,
    pub aromatic: bool,
    pub formal_charge: i32,
    pub explicit_h: u32,
    pub implicit_h: u32,
    pub degree: u32,
    pub in_ring: bool,
    /// Written as a bracket atom; bracket atoms never carry implicit hydrogens.
    pub bracket: bool,
}

impl Atom {
    pub fn total_h(&self) -> u32 {
        self.explicit_h + self.implicit_h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// An undirected molecular graph. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MolGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    /// For every atom, `(neighbor, bond index)` pairs in bond-creation order.
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl MolGraph {
    /// Builds a graph from atoms and bonds, recomputing degree, ring
    /// membership and implicit hydrogens. Bonds must already be valid
    /// (distinct endpoints, no duplicates, indices in range).
    pub(crate) fn from_parts(mut atoms: Vec<Atom>, bonds: Vec<Bond>) -> Self {
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (i, bond) in bonds.iter().enumerate() {
            adjacency[bond.a].push((bond.b, i));
            adjacency[bond.b].push((bond.a, i));
        }
        for (atom, nbrs) in atoms.iter_mut().zip(&adjacency) {
            atom.degree = nbrs.len() as u32;
            atom.in_ring = false;
        }
        let mut graph = MolGraph {
            atoms,
            bonds,
            adjacency,
        };
        for (i, bond) in graph.bonds.iter().enumerate() {
            if !graph.is_bridge(i) {
                graph.atoms[bond.a].in_ring = true;
                graph.atoms[bond.b].in_ring = true;
            }
        }
        for i in 0..graph.atoms.len() {
            let h = implicit_hydrogen_count(&graph, i);
            graph.atoms[i].implicit_h = h;
        }
        graph
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    /// `(neighbor, bond index)` pairs of `atom`.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.adjacency[a]
            .iter()
            .find(|&&(n, _)| n == b)
            .map(|&(_, bi)| &self.bonds[bi])
    }

    /// True when removing bond `index` disconnects its endpoints.
    fn is_bridge(&self, index: usize) -> bool {
        let Bond { a, b, .. } = self.bonds[index];
        let mut seen = vec![false; self.atoms.len()];
        let mut stack = vec![a];
        seen[a] = true;
        while let Some(v) = stack.pop() {
            for &(n, bi) in &self.adjacency[v] {
                if bi == index || seen[n] {
                    continue;
                }
                if n == b {
                    return false;
                }
                seen[n] = true;
                stack.push(n);
            }
        }
        true
    }

    /// Connected components as sorted atom-index lists.
    pub fn fragments(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.atoms.len()];
        let mut out = Vec::new();
        for start in 0..self.atoms.len() {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut i = 0;
            while i < comp.len() {
                for &(n, _) in &self.adjacency[comp[i]] {
                    if !seen[n] {
                        seen[n] = true;
                        comp.push(n);
                    }
                }
                i += 1;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// Implicit hydrogens of an organic-subset atom from its default valence.
///
/// Aromatic bonds count 1.5 and the bond-order sum is floored. Bracket atoms
/// return 0: their hydrogen count is explicit.
pub fn implicit_hydrogen_count(graph: &MolGraph, atom: usize) -> u32 {
    let a = &graph.atoms[atom];
    if a.bracket {
        return 0;
    }
    let Some(valence) = elements::default_valence(a.element) else {
        log::warn!(
            "element {} has no default valence; assuming zero implicit hydrogens",
            a.element
        );
        return 0;
    };
    let half: u32 = graph.adjacency[atom]
        .iter()
        .map(|&(_, bi)| graph.bonds[bi].order.half_units())
        .sum();
    let bond_sum = i64::from(half / 2);
    let h = i64::from(valence) - bond_sum - i64::from(a.explicit_h) + i64::from(a.formal_charge);
    h.max(0) as u32
}

/// Stable 64-bit code for the atom's local invariant tuple
/// (atomic number, degree, total H, formal charge, aromatic, in ring).
pub fn atom_invariant(graph: &MolGraph, atom: usize) -> u64 {
    let a = &graph.atoms[atom];
    invariant_code(a.element, a.degree, a.total_h(), a.formal_charge, a.aromatic, a.in_ring)
}

pub(crate) fn invariant_code(
    element: u8,
    degree: u32,
    total_h: u32,
    charge: i32,
    aromatic: bool,
    in_ring: bool,
) -> u64 {
    let mut h = StableHasher::new();
    h.write_u64(u64::from(element));
    h.write_u64(u64::from(degree));
    h.write_u64(u64::from(total_h));
    h.write_i64(i64::from(charge));
    h.write_bool(aromatic);
    h.write_bool(in_ring);
    h.finish()
}
