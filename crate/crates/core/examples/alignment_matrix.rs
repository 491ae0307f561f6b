//! Nearest-neighbor difference matrices of label and prediction vectors, and
//! the discriminator and generator losses computed on their rows.
//!
//! cargo run --release --example alignment_matrix

use dti_core::adversarial::{alignment_matrix, discriminator_loss, generator_adv_loss};
use dti_core::tensor::{Graph, Tensor, DEFAULT_LOG_EPS};

fn main() -> dti_core::Result<()> {
    let labels = [5.0, 5.4, 6.1, 7.9, 8.0, 4.2];
    let flat_predictions = [6.2; 6];
    for include_self in [true, false] {
        let m = alignment_matrix(&labels, 3, include_self)?;
        println!("labels, k=3, include_self={include_self}:");
        for (i, label) in labels.iter().enumerate() {
            println!("  {label:>4} -> {:?}", m.row(i));
        }
    }
    let fake = alignment_matrix(&flat_predictions, 3, true)?;
    println!("constant predictions give all-zero rows: {:?}", fake.row(0));

    // a discriminator that cannot tell rows apart outputs 0.5 everywhere
    let mut g = Graph::new();
    let half_real = g.constant(Tensor::matrix(6, 1, vec![0.5; 6])?);
    let half_fake = g.constant(Tensor::matrix(6, 1, vec![0.5; 6])?);
    let d = discriminator_loss(&mut g, half_real, half_fake, DEFAULT_LOG_EPS)?;
    let a = generator_adv_loss(&mut g, half_fake, DEFAULT_LOG_EPS)?;
    println!(
        "discriminator loss at D=0.5: {:.12} (2 ln 2 = {:.12})",
        g.value(d).data()[0],
        2.0 * 2f64.ln()
    );
    println!(
        "generator adversarial loss at D=0.5: {:.12} (ln 2 = {:.12})",
        g.value(a).data()[0],
        2f64.ln()
    );
    Ok(())
}
