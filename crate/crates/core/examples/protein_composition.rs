//! Protein sequence composition: amino-acid (20), dipeptide (400) and
//! tripeptide (8000) frequencies.
//!
//! cargo run --release --example protein_composition -- MKVLAAGIVGLLLAA

use dti_core::protein::{psc, psc_scaled, PscScale, AMINO_ACIDS, PSC_LEN};

fn main() -> dti_core::Result<()> {
    let seq = std::env::args().nth(1).unwrap_or_else(|| "MKVLAAGIVGLLLAA".to_string());
    let v = psc(&seq)?;
    println!("{seq}: {} features (expected {PSC_LEN})", v.as_slice().len());
    for (name, block) in [("AAC", v.aac()), ("DC", v.dc()), ("TC", v.tc())] {
        let nonzero = block.iter().filter(|&&x| x > 0.0).count();
        println!("  {name:<3} sum={:.12} nonzero={nonzero}", block.iter().sum::<f64>());
    }
    for (i, &f) in v.aac().iter().enumerate().filter(|(_, &f)| f > 0.0) {
        println!("  {} {:.4}", AMINO_ACIDS[i] as char, f);
    }
    let pct = psc_scaled(&seq, PscScale::Percent)?;
    println!("percent scale AAC sum: {:.6}", pct.aac().iter().sum::<f64>());
    match psc("MKXB") {
        Ok(_) => println!("unexpected success"),
        Err(e) => println!("non-standard residues: {e}"),
    }
    Ok(())
}
