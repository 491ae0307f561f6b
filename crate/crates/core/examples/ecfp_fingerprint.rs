//! Extended-connectivity fingerprints: substructure identifiers, folding,
//! and invariance under atom reordering.
//!
//! cargo run --release --example ecfp_fingerprint -- "c1ccccc1O"

use dti_core::chem::{parse_smiles, random_smiles};
use dti_core::fingerprint::{ecfp, ecfp_identifiers, fold};

fn main() -> dti_core::Result<()> {
    let smiles = std::env::args().nth(1).unwrap_or_else(|| "c1ccccc1O".to_string());
    let graph = parse_smiles(&smiles).map_err(|source| dti_core::Error::Smiles {
        smiles: smiles.clone(),
        source,
    })?;

    let ids = ecfp_identifiers(&graph, 4);
    println!("{smiles}: {} unique substructure identifiers up to radius 4", ids.len());
    for id in ids.iter().take(12) {
        println!("  r={} code={:016x} atoms={:?}", id.radius, id.code, id.atoms);
    }

    let fp = ecfp(&graph, 8, 1024)?;
    println!(
        "ECFP8/1024 popcount {} bits {:?}",
        fp.popcount(),
        fp.ones().collect::<Vec<_>>()
    );
    println!("folded to 64 bits: popcount {}", fold(&ids, 64)?.popcount());

    for seed in 0..5 {
        let rewrite = random_smiles(&graph, seed);
        let other = ecfp(&parse_smiles(&rewrite).expect("rewrite parses"), 8, 1024)?;
        println!("  {rewrite:<24} identical={}", other == fp);
    }
    println!("hex: {}", fp.to_hex());
    Ok(())
}
