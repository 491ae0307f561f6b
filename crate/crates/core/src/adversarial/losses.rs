use crate::error::{Error, Result};
use crate::tensor::{Graph, Var};

/// Mean squared residual. Shapes must match.
pub fn mse_loss(g: &mut Graph, predictions: Var, labels: Var) -> Result<Var> {
    if g.value(predictions).numel() == 0 {
        return Err(Error::Data("mse of an empty batch".into()));
    }
    let d = g.sub(predictions, labels)?;
    let sq = g.square(d);
    g.mean(sq)
}

fn nonempty(g: &Graph, v: Var, what: &str) -> Result<()> {
    if g.value(v).numel() == 0 {
        return Err(Error::Data(format!("{what} set is empty")));
    }
    Ok(())
}

/// `mean(-ln D(real)) + mean(-ln(1 - D(fake)))` over discriminator outputs,
/// with each logarithm guarded below by `eps`.
pub fn discriminator_loss(g: &mut Graph, d_real: Var, d_fake: Var, eps: f64) -> Result<Var> {
    nonempty(g, d_real, "real row")?;
    nonempty(g, d_fake, "fake row")?;
    let lr = g.log_guarded(d_real, eps)?;
    let real = g.mean(lr)?;
    let neg = g.neg(d_fake);
    let one_minus = g.add_scalar(neg, 1.0);
    let lf = g.log_guarded(one_minus, eps)?;
    let fake = g.mean(lf)?;
    let total = g.add(real, fake)?;
    Ok(g.neg(total))
}

/// `mean(-ln D(fake))`, guarded by `eps`.
pub fn generator_adv_loss(g: &mut Graph, d_fake: Var, eps: f64) -> Result<Var> {
    nonempty(g, d_fake, "fake row")?;
    let l = g.log_guarded(d_fake, eps)?;
    let m = g.mean(l)?;
    Ok(g.neg(m))
}

/// `mse + lambda * adv`. With `lambda == 0` the result is the `mse` node
/// itself, so gradients are exactly those of the regression loss.
pub fn composite_generator_loss(g: &mut Graph, mse: Var, adv: Var, lambda: f64) -> Result<Var> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Config(format!(
            "lambda must be finite and non-negative, got {lambda}"
        )));
    }
    if lambda == 0.0 {
        return Ok(mse);
    }
    let weighted = g.scalar_mul(adv, lambda);
    g.add(mse, weighted)
}
