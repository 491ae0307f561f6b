use super::{Graph, Tensor, Var};
use crate::error::{Error, Result};

/// `|analytic - numeric| / max(1, |analytic|, |numeric|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1f64.max(analytic.abs()).max(numeric.abs())
}

/// Compares reverse-mode gradients of `f` at `point` against central
/// differences with the given `step`, returning the largest
/// [`relative_error`] over all coordinates of all leaves.
///
/// `f` receives one trainable leaf per entry of `point` and must return a
/// one-element node.
pub fn grad_check<F>(f: F, point: &[Tensor], step: f64) -> Result<f64>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    let eval = |values: &[Tensor]| -> Result<f64> {
        let mut g = Graph::new();
        let vars: Vec<Var> = values.iter().map(|t| g.param(t.clone())).collect();
        let out = f(&mut g, &vars)?;
        g.value(out)
            .item()
            .ok_or_else(|| Error::Tensor("grad_check: function output is not scalar".into()))
    };

    let mut g = Graph::new();
    let vars: Vec<Var> = point.iter().map(|t| g.param(t.clone())).collect();
    let out = f(&mut g, &vars)?;
    let grads = g.backward(out)?;

    let mut worst = 0.0f64;
    let mut probe = point.to_vec();
    for (leaf, var) in vars.iter().enumerate() {
        let analytic = grads
            .get(*var)
            .ok_or_else(|| Error::Tensor("grad_check: missing leaf gradient".into()))?
            .data()
            .to_vec();
        for (i, &a) in analytic.iter().enumerate() {
            let x0 = point[leaf].data()[i];
            probe[leaf].data_mut()[i] = x0 + step;
            let up = eval(&probe)?;
            probe[leaf].data_mut()[i] = x0 - step;
            let down = eval(&probe)?;
            probe[leaf].data_mut()[i] = x0;
            let numeric = (up - down) / (2.0 * step);
            worst = worst.max(relative_error(a, numeric));
        }
    }
    Ok(worst)
}
