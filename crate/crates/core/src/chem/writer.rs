//! SMILES output with a caller-chosen traversal order.
//!
//! Not canonical: the same molecule written from different starting atoms or
//! neighbor orders yields different strings. Used to generate atom-order
//! rewrites of a molecule.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::elements;
use super::{Atom, BondOrder, MolGraph};

/// Writes `graph` as SMILES visiting atoms in index order.
pub fn write_smiles(graph: &MolGraph) -> String {
    let order: Vec<usize> = (0..graph.atom_count()).collect();
    write_with(graph, &order, |_| {})
}

/// Writes `graph` as SMILES with a randomized start atom per fragment and
/// randomized neighbor order, driven by `seed`.
pub fn random_smiles(graph: &MolGraph, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..graph.atom_count()).collect();
    order.shuffle(&mut rng);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(rng.gen());
    write_with(graph, &order, move |nbrs| nbrs.shuffle(&mut shuffle_rng))
}

fn write_with(graph: &MolGraph, start_order: &[usize], mut arrange: impl FnMut(&mut Vec<usize>)) -> String {
    let n = graph.atom_count();
    // DFS pass: tree children per atom and ring-closure partners.
    let mut visited = vec![false; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut closures: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut preorder = Vec::with_capacity(n);
    let mut roots = Vec::new();
    for &start in start_order {
        if visited[start] {
            continue;
        }
        roots.push(start);
        dfs(
            graph,
            start,
            None,
            &mut visited,
            &mut children,
            &mut closures,
            &mut preorder,
            &mut arrange,
        );
    }

    let mut out = String::new();
    let mut digits: Vec<Option<usize>> = vec![None; 100];
    let mut ring_digit: std::collections::HashMap<(usize, usize), usize> = Default::default();
    for (i, &root) in roots.iter().enumerate() {
        if i > 0 {
            out.push('.');
        }
        emit(
            graph,
            root,
            None,
            &children,
            &closures,
            &mut digits,
            &mut ring_digit,
            &mut out,
        );
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    graph: &MolGraph,
    v: usize,
    parent: Option<usize>,
    visited: &mut [bool],
    children: &mut [Vec<usize>],
    closures: &mut [Vec<usize>],
    preorder: &mut Vec<usize>,
    arrange: &mut impl FnMut(&mut Vec<usize>),
) {
    visited[v] = true;
    preorder.push(v);
    let mut nbrs: Vec<usize> = graph.neighbors(v).iter().map(|&(u, _)| u).collect();
    arrange(&mut nbrs);
    for u in nbrs {
        if Some(u) == parent {
            continue;
        }
        if visited[u] {
            // back edge: record once, at the later atom, when `u` is an ancestor
            if !closures[u].contains(&v) {
                closures[v].push(u);
                closures[u].push(v);
            }
            continue;
        }
        children[v].push(u);
        dfs(graph, u, Some(v), visited, children, closures, preorder, arrange);
    }
}

#[allow(clippy::too_many_arguments)]
fn emit(
    graph: &MolGraph,
    v: usize,
    parent: Option<usize>,
    children: &[Vec<usize>],
    closures: &[Vec<usize>],
    digits: &mut [Option<usize>],
    ring_digit: &mut std::collections::HashMap<(usize, usize), usize>,
    out: &mut String,
) {
    if let Some(p) = parent {
        out.push_str(bond_symbol(graph, p, v));
    }
    write_atom(&graph.atoms()[v], out);
    for &u in &closures[v] {
        let key = (v.min(u), v.max(u));
        if let Some(d) = ring_digit.remove(&key) {
            // closing an open ring
            digits[d] = None;
            push_digit(d, out);
        } else {
            let d = (1..digits.len())
                .find(|&d| digits[d].is_none())
                .expect("more than 99 simultaneously open rings");
            digits[d] = Some(v);
            ring_digit.insert(key, d);
            out.push_str(bond_symbol(graph, v, u));
            push_digit(d, out);
        }
    }
    let kids = &children[v];
    for (i, &c) in kids.iter().enumerate() {
        let last = i + 1 == kids.len();
        if !last {
            out.push('(');
        }
        emit(graph, c, Some(v), children, closures, digits, ring_digit, out);
        if !last {
            out.push(')');
        }
    }
}

fn push_digit(d: usize, out: &mut String) {
    if d < 10 {
        out.push_str(&d.to_string());
    } else {
        out.push_str(&format!("%{d:02}"));
    }
}

fn bond_symbol(graph: &MolGraph, a: usize, b: usize) -> &'static str {
    let both_aromatic = graph.atoms()[a].aromatic && graph.atoms()[b].aromatic;
    match graph.bond_between(a, b).map(|bd| bd.order) {
        Some(BondOrder::Single) if both_aromatic => "-",
        Some(BondOrder::Double) => "=",
        Some(BondOrder::Triple) => "#",
        Some(BondOrder::Aromatic) if !both_aromatic => ":",
        _ => "",
    }
}

fn write_atom(atom: &Atom, out: &mut String) {
    let sym = elements::symbol(atom.element).unwrap_or("*");
    let render = |s: &str| {
        if atom.aromatic {
            s.to_ascii_lowercase()
        } else {
            s.to_string()
        }
    };
    if !atom.bracket {
        out.push_str(&render(sym));
        return;
    }
    out.push('[');
    out.push_str(&render(sym));
    match atom.explicit_h {
        0 => {}
        1 => out.push('H'),
        h => out.push_str(&format!("H{h}")),
    }
    match atom.formal_charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        c if c > 0 => out.push_str(&format!("+{c}")),
        c => out.push_str(&format!("-{}", -c)),
    }
    out.push(']');
}
