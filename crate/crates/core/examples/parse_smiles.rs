//! Parse SMILES into molecular graphs and print per-atom properties.
//!
//! cargo run --release --example parse_smiles -- "CC(=O)Nc1ccc(O)cc1"

use dti_core::chem::{elements, parse_smiles, random_smiles, write_smiles};

fn main() {
    let inputs: Vec<String> = std::env::args().skip(1).collect();
    let inputs = if inputs.is_empty() {
        vec!["CC(=O)Nc1ccc(O)cc1".to_string(), "[NH4+].[Cl-]".into(), "C1CC".into()]
    } else {
        inputs
    };
    for smiles in &inputs {
        println!("{smiles}");
        let graph = match parse_smiles(smiles) {
            Ok(g) => g,
            Err(e) => {
                println!("  error: {e}\n");
                continue;
            }
        };
        println!(
            "  {} atoms, {} bonds, {} fragments",
            graph.atom_count(),
            graph.bond_count(),
            graph.fragments().len()
        );
        for (i, a) in graph.atoms().iter().enumerate() {
            println!(
                "  {i:>3} {:<2} degree={} H={} charge={:+} aromatic={} ring={}",
                elements::symbol(a.element).unwrap_or("?"),
                a.degree,
                a.total_h(),
                a.formal_charge,
                a.aromatic,
                a.in_ring
            );
        }
        println!("  written:   {}", write_smiles(&graph));
        for seed in 0..3 {
            println!("  rewrite {seed}: {}", random_smiles(&graph, seed));
        }
        println!();
    }
}
