//! Reverse-mode differentiation on a small computation graph, verified
//! against central finite differences.
//!
//! cargo run --release --example autodiff_gradcheck

use dti_core::tensor::{grad_check, Graph, Tensor};

fn main() -> dti_core::Result<()> {
    // loss = mean(sigmoid(x W + b)^2)
    let x = Tensor::matrix(3, 2, vec![0.5, -1.0, 2.0, 0.3, -0.7, 1.1])?;
    let w = Tensor::matrix(2, 2, vec![0.1, -0.2, 0.4, 0.3])?;
    let b = Tensor::from_vec(vec![0.05, -0.05]);

    let mut g = Graph::new();
    let xv = g.constant(x.clone());
    let wv = g.param(w.clone());
    let bv = g.param(b.clone());
    let z = g.matmul(xv, wv)?;
    let z = g.add(z, bv)?;
    let s = g.sigmoid(z);
    let sq = g.square(s);
    let loss = g.mean(sq)?;
    let grads = g.backward(loss)?;
    println!("loss = {:.6}", g.value(loss).data()[0]);
    println!("dL/dW = {:?}", grads.get(wv).map(Tensor::data));
    println!("dL/db = {:?}", grads.get(bv).map(Tensor::data));
    println!("dL/dx is {:?} (constant)", grads.get(xv).map(Tensor::data));

    let err = grad_check(
        |g, v| {
            let xv = g.constant(x.clone());
            let z = g.matmul(xv, v[0])?;
            let z = g.add(z, v[1])?;
            let s = g.sigmoid(z);
            let sq = g.square(s);
            g.mean(sq)
        },
        &[w, b],
        1e-6,
    )?;
    println!("max relative error vs finite differences: {err:.2e}");
    Ok(())
}
