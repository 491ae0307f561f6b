//! Fixed-width per-atom feature rows for graph convolution.

use crate::chem::{elements, MolGraph};
use crate::tensor::Tensor;

const ELEMENT_SLOTS: usize = elements::ORGANIC_SUBSET.len() + 1;
const DEGREE_SLOTS: usize = 6;
const HYDROGEN_SLOTS: usize = 5;
const CHARGE_SLOTS: usize = 3;

/// Element one-hot (organic subset + other), degree 0..=5, total H 0..=4,
/// charge -1/0/+1, aromatic flag, ring flag. Out-of-range values clamp to
/// the nearest slot.
pub const ATOM_FEATURE_WIDTH: usize = ELEMENT_SLOTS + DEGREE_SLOTS + HYDROGEN_SLOTS + CHARGE_SLOTS + 2;

pub fn atom_feature_row(graph: &MolGraph, atom: usize) -> [f64; ATOM_FEATURE_WIDTH] {
    let a = &graph.atoms()[atom];
    let mut row = [0.0; ATOM_FEATURE_WIDTH];
    let element = elements::ORGANIC_SUBSET
        .iter()
        .position(|&z| z == a.element)
        .unwrap_or(ELEMENT_SLOTS - 1);
    row[element] = 1.0;
    let mut off = ELEMENT_SLOTS;
    row[off + (a.degree as usize).min(DEGREE_SLOTS - 1)] = 1.0;
    off += DEGREE_SLOTS;
    row[off + (a.total_h() as usize).min(HYDROGEN_SLOTS - 1)] = 1.0;
    off += HYDROGEN_SLOTS;
    row[off + (a.formal_charge.clamp(-1, 1) + 1) as usize] = 1.0;
    off += CHARGE_SLOTS;
    row[off] = f64::from(u8::from(a.aromatic));
    row[off + 1] = f64::from(u8::from(a.in_ring));
    row
}

/// `[atoms, ATOM_FEATURE_WIDTH]` feature matrix.
pub fn atom_features(graph: &MolGraph) -> Tensor {
    let data: Vec<f64> = (0..graph.atom_count())
        .flat_map(|i| atom_feature_row(graph, i))
        .collect();
    Tensor::matrix(graph.atom_count(), ATOM_FEATURE_WIDTH, data).expect("consistent shape")
}
