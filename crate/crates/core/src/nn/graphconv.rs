//! Learned molecular descriptor: neighborhood-sum graph convolution followed
//! by a sum gather over atoms.
//!
//! Each layer computes `h'_v = relu(h_v W_self + (sum_{u in N(v)} h_u) W_neigh + b)`.

use std::rc::Rc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::{atom_features, ATOM_FEATURE_WIDTH};
use super::mlp::glorot;
use crate::chem::MolGraph;
use crate::error::{Error, Result};
use crate::tensor::{Graph, Tensor, Var};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphConvLayer {
    pub w_self: Tensor,
    pub w_neigh: Tensor,
    pub bias: Tensor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphConvParams {
    pub layers: Vec<GraphConvLayer>,
}

impl GraphConvParams {
    /// Layers of the given output widths on top of the atom feature width.
    pub fn new(widths: &[usize], rng: &mut impl Rng) -> Result<Self> {
        if widths.is_empty() || widths.contains(&0) {
            return Err(Error::Config(format!("invalid graph-conv widths {widths:?}")));
        }
        let mut input = ATOM_FEATURE_WIDTH;
        let mut layers = Vec::new();
        for &out in widths {
            layers.push(GraphConvLayer {
                w_self: glorot(input, out, rng),
                w_neigh: glorot(input, out, rng),
                bias: Tensor::zeros(&[out]),
            });
            input = out;
        }
        Ok(Self { layers })
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.w_self.shape()[1])
    }

    pub fn bind(&self, g: &mut Graph, trainable: bool) -> BoundGraphConv {
        let mut leaf = |t: &Tensor| {
            if trainable {
                g.param(t.clone())
            } else {
                g.constant(t.clone())
            }
        };
        BoundGraphConv {
            layers: self
                .layers
                .iter()
                .map(|l| [leaf(&l.w_self), leaf(&l.w_neigh), leaf(&l.bias)])
                .collect(),
        }
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.w_self, &mut l.w_neigh, &mut l.bias])
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct BoundGraphConv {
    pub layers: Vec<[Var; 3]>,
}

impl BoundGraphConv {
    pub fn vars(&self) -> Vec<Var> {
        self.layers.iter().flatten().copied().collect()
    }
}

/// Several molecules stacked into one disconnected atom set.
#[derive(Debug, Clone)]
pub struct MolBatch {
    /// `[total atoms, ATOM_FEATURE_WIDTH]`
    pub features: Tensor,
    /// Neighbor rows of every stacked atom.
    pub neighbors: Rc<Vec<Vec<usize>>>,
    /// Stacked atom rows of every molecule.
    pub molecules: Rc<Vec<Vec<usize>>>,
}

impl MolBatch {
    pub fn new(graphs: &[&MolGraph]) -> Self {
        let mut data = Vec::new();
        let mut neighbors = Vec::new();
        let mut molecules = Vec::new();
        let mut offset = 0;
        for graph in graphs {
            data.extend_from_slice(atom_features(graph).data());
            for v in 0..graph.atom_count() {
                neighbors.push(graph.neighbors(v).iter().map(|&(u, _)| u + offset).collect());
            }
            molecules.push((offset..offset + graph.atom_count()).collect());
            offset += graph.atom_count();
        }
        Self {
            features: Tensor::matrix(offset, ATOM_FEATURE_WIDTH, data).expect("consistent shape"),
            neighbors: Rc::new(neighbors),
            molecules: Rc::new(molecules),
        }
    }

    pub fn len(&self) -> usize {
        self.molecules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.molecules.is_empty()
    }
}

/// Encodes every molecule of `batch`; returns `[molecules, output width]`.
pub fn graphconv_forward(g: &mut Graph, params: &BoundGraphConv, batch: &MolBatch) -> Result<Var> {
    let mut h = g.constant(batch.features.clone());
    for &[w_self, w_neigh, bias] in &params.layers {
        let own = g.matmul(h, w_self)?;
        let nsum = g.row_group_sum(h, Rc::clone(&batch.neighbors))?;
        let other = g.matmul(nsum, w_neigh)?;
        let z = g.add(own, other)?;
        let z = g.add(z, bias)?;
        h = g.relu(z);
    }
    g.row_group_sum(h, Rc::clone(&batch.molecules))
}
