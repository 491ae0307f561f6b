use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Graph, Tensor, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
}

impl Activation {
    fn apply(self, g: &mut Graph, x: Var) -> Var {
        match self {
            Activation::Identity => x,
            Activation::Relu => g.relu(x),
            Activation::Sigmoid => g.sigmoid(x),
        }
    }
}

/// Uniform Glorot initialization, `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Tensor {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-limit..=limit)).collect();
    Tensor::matrix(rows, cols, data).expect("consistent shape")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    /// `[in, out]`
    pub weight: Tensor,
    /// `[out]`
    pub bias: Tensor,
}

impl Linear {
    pub fn new(input: usize, output: usize, rng: &mut impl Rng) -> Self {
        Self {
            weight: glorot(input, output, rng),
            bias: Tensor::zeros(&[output]),
        }
    }

    pub fn input_width(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn output_width(&self) -> usize {
        self.weight.shape()[1]
    }
}

/// Fully connected stack: `hidden` activation between layers, `output`
/// activation after the last one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Linear>,
    pub hidden: Activation,
    pub output: Activation,
}

/// An [`Mlp`] whose tensors are registered as nodes of a [`Graph`].
#[derive(Debug, Clone)]
pub struct BoundMlp {
    pub layers: Vec<(Var, Var)>,
    hidden: Activation,
    output: Activation,
}

impl Mlp {
    /// `widths = [input, hidden.., output]`.
    pub fn new(widths: &[usize], hidden: Activation, output: Activation, rng: &mut impl Rng) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::Config(format!("invalid layer widths {widths:?}")));
        }
        let layers = widths.windows(2).map(|w| Linear::new(w[0], w[1], rng)).collect();
        Ok(Self { layers, hidden, output })
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].input_width()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, Linear::output_width)
    }

    /// Registers the weights as trainable leaves (or constants).
    pub fn bind(&self, g: &mut Graph, trainable: bool) -> BoundMlp {
        let mut leaf = |t: &Tensor| {
            if trainable {
                g.param(t.clone())
            } else {
                g.constant(t.clone())
            }
        };
        BoundMlp {
            layers: self.layers.iter().map(|l| (leaf(&l.weight), leaf(&l.bias))).collect(),
            hidden: self.hidden,
            output: self.output,
        }
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weight, &mut l.bias])
            .collect()
    }
}

impl BoundMlp {
    /// Binds already-registered `[w0, b0, w1, b1, ..]` nodes.
    pub fn from_vars(vars: &[Var], hidden: Activation, output: Activation) -> Self {
        Self {
            layers: vars.chunks(2).map(|c| (c[0], c[1])).collect(),
            hidden,
            output,
        }
    }

    pub fn vars(&self) -> Vec<Var> {
        self.layers.iter().flat_map(|&(w, b)| [w, b]).collect()
    }

    /// `x` is `[batch, input]`; returns `[batch, output]`.
    pub fn forward(&self, g: &mut Graph, x: Var) -> Result<Var> {
        let (w, _) = self.layers[0];
        let z = g.matmul(x, w)?;
        self.finish(g, z)
    }

    /// Same as [`forward`](Self::forward) on the input `fixed + place(parts)`,
    /// where each `(part, offset)` fills columns `offset..offset + width` that
    /// are zero in `fixed`. Only the parts receive input gradients, so a wide
    /// constant input costs nothing beyond its nonzero entries.
    pub fn forward_split(&self, g: &mut Graph, fixed: Var, parts: &[(Var, usize)]) -> Result<Var> {
        let (w, _) = self.layers[0];
        let mut z = g.matmul(fixed, w)?;
        let cols = g.value(w).cols();
        for &(part, offset) in parts {
            let width = g.value(part).cols();
            let idx = (offset * cols..(offset + width) * cols).collect();
            let block = g.gather(w, idx, vec![width, cols])?;
            let zp = g.matmul(part, block)?;
            z = g.add(z, zp)?;
        }
        self.finish(g, z)
    }

    fn finish(&self, g: &mut Graph, first: Var) -> Result<Var> {
        let mut z = first;
        for (i, &(w, b)) in self.layers.iter().enumerate() {
            if i > 0 {
                z = g.matmul(z, w)?;
            }
            let zb = g.add(z, b)?;
            let act = if i + 1 == self.layers.len() {
                self.output
            } else {
                self.hidden
            };
            z = act.apply(g, zb);
        }
        Ok(z)
    }
}
