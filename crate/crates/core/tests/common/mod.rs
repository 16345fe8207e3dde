//! Shared support for the integration suites: corpus loading and the
//! tuple-level evaluation oracle that cross-checks the orbit-level join
//! engine.

#![allow(dead_code)]

use std::collections::BTreeSet;

use bincsp::binary_core::{embeds_into_core, BinaryCore, FiniteStructure, OrbitalId};
use bincsp::orbits::{canonicalize, Orbit, PairLabel};
use bincsp::relalg::Relation;

pub fn corpus_path(name: &str) -> String {
    format!("{}/../../corpus/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

pub fn load_core(name: &str) -> BinaryCore {
    let text = std::fs::read_to_string(corpus_path(name)).expect("corpus file");
    bincsp::io::load_core(&text).expect("valid corpus core")
}

pub fn load_language(name: &str, core: &BinaryCore) -> Vec<(String, Relation)> {
    let text = std::fs::read_to_string(corpus_path(name)).expect("corpus file");
    bincsp::io::load_language(&text, core).expect("valid corpus language")
}

/// Independent evaluation of an existential join: enumerate every labeled
/// witness structure over the point set directly (partitions by restricted
/// growth strings, labels by an odometer), keep the realizable ones, check
/// the atoms by restriction, and collect the visible orbits.
pub fn oracle_exist_join(
    core: &BinaryCore,
    atoms: &[(&Relation, &[usize])],
    visible: &[usize],
) -> Relation {
    let sig = core.signature();
    let points = atoms
        .iter()
        .flat_map(|(_, coords)| coords.iter())
        .chain(visible.iter())
        .max()
        .map(|m| m + 1)
        .unwrap_or(0);
    let mut out: BTreeSet<Orbit> = BTreeSet::new();
    for partition in all_partitions(points) {
        let blocks = partition.iter().max().map(|b| b + 1).unwrap_or(0);
        let slots = blocks * blocks.saturating_sub(1) / 2;
        let kappa = core.orbital_count();
        let mut counter = vec![0usize; slots];
        loop {
            let labels: Vec<OrbitalId> =
                counter.iter().map(|c| OrbitalId::from_index(*c)).collect();
            let structure = FiniteStructure::from_upper_triangle(blocks, labels).unwrap();
            if embeds_into_core(&structure, core) {
                let satisfied = atoms.iter().all(|(rel, coords)| {
                    rel.contains(&induced_orbit(coords, &partition, &structure, sig))
                });
                if satisfied {
                    out.insert(induced_orbit(visible, &partition, &structure, sig));
                }
            }
            // Advance the odometer.
            let mut pos = 0;
            loop {
                if pos == slots {
                    break;
                }
                counter[pos] += 1;
                if counter[pos] < kappa {
                    break;
                }
                counter[pos] = 0;
                pos += 1;
            }
            if pos == slots {
                break;
            }
        }
    }
    Relation::new(visible.len(), out).unwrap()
}

fn induced_orbit(
    coords: &[usize],
    partition: &[usize],
    structure: &FiniteStructure,
    sig: &bincsp::binary_core::CoreSignature,
) -> Orbit {
    let pattern: Vec<usize> = coords.iter().map(|c| partition[*c]).collect();
    let mut labels = Vec::new();
    for (b, &pb) in pattern.iter().enumerate() {
        for (a, &pa) in pattern.iter().enumerate().take(b) {
            if pa != pb {
                labels.push((a, b, PairLabel::Orbital(structure.label(pa, pb, sig))));
            }
        }
    }
    canonicalize(coords.len(), &pattern, &labels, sig).expect("coherent by construction")
}

/// All partitions of `0..n` as restricted growth strings.
pub fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut current = vec![0usize; n];
    fn rec(n: usize, depth: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if depth == n {
            out.push(current.clone());
            return;
        }
        let max = *current[..depth].iter().max().unwrap();
        for b in 0..=max + 1 {
            current[depth] = b;
            rec(n, depth + 1, current, out);
        }
        current[depth] = 0;
    }
    rec(n, 1, &mut current, &mut out);
    out
}
