use crate::error::{Error, Result};
use crate::tensor::{Graph, Tensor, Var};

/// Row `i` lists the `k` smallest absolute differences between element `i`
/// and the elements of the vector, in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentMatrix {
    rows: usize,
    k: usize,
    data: Vec<f64>,
}

impl AlignmentMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::matrix(self.rows, self.k, self.data.clone()).expect("consistent shape")
    }
}

fn check(n: usize, k: usize, include_self: bool) -> Result<()> {
    if n < 2 {
        return Err(Error::Config(format!("alignment needs at least 2 values, got {n}")));
    }
    let max = if include_self { n } else { n - 1 };
    if k == 0 || k > max {
        return Err(Error::Config(format!(
            "neighbor count k={k} out of range 1..={max} for {n} values"
        )));
    }
    Ok(())
}

/// For each `i`, the indices `j` of its `k` nearest values, ordered by
/// `(|v_i - v_j|, j)`. Flattened row-major, `n * k` entries.
pub fn alignment_neighbors(values: &[f64], k: usize, include_self: bool) -> Result<Vec<usize>> {
    let n = values.len();
    check(n, k, include_self)?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("alignment values must be finite".into()));
    }
    let mut out = Vec::with_capacity(n * k);
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(n);
    for (i, &vi) in values.iter().enumerate() {
        order.clear();
        order.extend(
            values
                .iter()
                .enumerate()
                .filter(|&(j, _)| include_self || j != i)
                .map(|(j, &vj)| ((vi - vj).abs(), j)),
        );
        let by_key = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < order.len() {
            order.select_nth_unstable_by(k - 1, by_key);
            order.truncate(k);
        }
        order.sort_unstable_by(by_key);
        out.extend(order.iter().map(|&(_, j)| j));
    }
    Ok(out)
}

pub fn alignment_matrix(values: &[f64], k: usize, include_self: bool) -> Result<AlignmentMatrix> {
    let nbrs = alignment_neighbors(values, k, include_self)?;
    let data = nbrs
        .iter()
        .enumerate()
        .map(|(t, &j)| (values[t / k] - values[j]).abs())
        .collect();
    Ok(AlignmentMatrix {
        rows: values.len(),
        k,
        data,
    })
}

/// Differentiable alignment matrix of `values` (`[n]`, `[n, 1]` or `[1, n]`),
/// shaped `[n, k]`. Neighbor order is computed from the current values and
/// held fixed, so gradients flow through `|v_i - v_j|` only.
pub fn alignment_rows(g: &mut Graph, values: Var, k: usize, include_self: bool) -> Result<Var> {
    let v = g.value(values);
    let shape = v.shape();
    let is_vector = match shape {
        [_] => true,
        [n, 1] | [1, n] => *n == v.numel(),
        _ => false,
    };
    if !is_vector {
        return Err(Error::Tensor(format!("alignment_rows needs a vector, got {shape:?}")));
    }
    let n = v.numel();
    let nbrs = alignment_neighbors(v.data(), k, include_self)?;
    let own = (0..n * k).map(|t| t / k).collect();
    let vi = g.gather(values, own, vec![n, k])?;
    let vj = g.gather(values, nbrs, vec![n, k])?;
    let d = g.sub(vi, vj)?;
    Ok(g.abs(d))
}
