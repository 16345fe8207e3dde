//! Instance generation: canonical enumeration for language analysis and
//! seeded random sampling for property campaigns.

use rand::Rng;

use crate::minimality::{Constraint, Instance};
use crate::relalg::Relation;
use crate::Result;

/// All single-constraint instances per language relation, plus all
/// two-constraint instances over at most `max_vars` variables with canonical
/// variable namings, deduplicated by isomorphism (variable renaming and
/// constraint reordering).
pub fn canonical_instances(
    language: &[(String, Relation)],
    max_vars: usize,
    max_constraints: usize,
) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    let mut seen: std::collections::BTreeSet<Vec<(usize, Vec<usize>)>> =
        std::collections::BTreeSet::new();

    for (ri, (_, relation)) in language.iter().enumerate() {
        let k = relation.arity();
        if k == 0 || k > max_vars {
            continue;
        }
        let scope: Vec<usize> = (0..k).collect();
        seen.insert(canonical_key(&[(ri, scope.clone())], k));
        out.push(instance_from(vec![(relation.clone(), scope)], k)?);
    }
    if max_constraints < 2 {
        return Ok(out);
    }

    for (i, (_, r1)) in language.iter().enumerate() {
        for (j, (_, r2)) in language.iter().enumerate().skip(i) {
            let (k1, k2) = (r1.arity(), r2.arity());
            if k1 == 0 || k2 == 0 || k1 > max_vars {
                continue;
            }
            let scope1: Vec<usize> = (0..k1).collect();
            for m in k1.max(k2)..=(k1 + k2).min(max_vars) {
                for scope2 in injective_tuples(m, k2) {
                    // Both scopes together must touch every variable.
                    let mut covered = vec![false; m];
                    for &v in scope1.iter().chain(scope2.iter()) {
                        covered[v] = true;
                    }
                    if !covered.iter().all(|c| *c) {
                        continue;
                    }
                    if i == j && scope2 == scope1 {
                        continue;
                    }
                    let key = canonical_key(&[(i, scope1.clone()), (j, scope2.clone())], m);
                    if seen.insert(key) {
                        out.push(instance_from(
                            vec![(r1.clone(), scope1.clone()), (r2.clone(), scope2)],
                            m,
                        )?);
                    }
                }
            }
        }
    }
    Ok(out)
}

fn instance_from(constraints: Vec<(Relation, Vec<usize>)>, vars: usize) -> Result<Instance> {
    Instance::new(
        (0..vars).map(|v| format!("v{v}")).collect(),
        constraints
            .into_iter()
            .map(|(relation, scope)| Constraint { scope, relation })
            .collect(),
    )
}

/// Canonical form of a constraint multiset under variable permutation.
fn canonical_key(constraints: &[(usize, Vec<usize>)], vars: usize) -> Vec<(usize, Vec<usize>)> {
    let mut best: Option<Vec<(usize, Vec<usize>)>> = None;
    for perm in permutations(vars) {
        let mut mapped: Vec<(usize, Vec<usize>)> = constraints
            .iter()
            .map(|(r, scope)| (*r, scope.iter().map(|v| perm[*v]).collect()))
            .collect();
        mapped.sort();
        if best.as_ref().is_none_or(|b| &mapped < b) {
            best = Some(mapped);
        }
    }
    best.unwrap()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = Vec::with_capacity(n);
    fn rec(n: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == n {
            out.push(current.clone());
            return;
        }
        for v in 0..n {
            if !current.contains(&v) {
                current.push(v);
                rec(n, current, out);
                current.pop();
            }
        }
    }
    rec(n, &mut current, &mut out);
    out
}

fn injective_tuples(n: usize, width: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(width);
    fn rec(n: usize, width: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == width {
            out.push(current.clone());
            return;
        }
        for v in 0..n {
            if !current.contains(&v) {
                current.push(v);
                rec(n, width, current, out);
                current.pop();
            }
        }
    }
    rec(n, width, &mut current, &mut out);
    out
}

/// A random instance: `n_constraints` constraints drawn from the language
/// with uniformly random injective scopes over `n_vars` variables.
pub fn random_instance(
    rng: &mut impl Rng,
    language: &[(String, Relation)],
    n_vars: usize,
    n_constraints: usize,
) -> Result<Instance> {
    let usable: Vec<&(String, Relation)> = language
        .iter()
        .filter(|(_, r)| r.arity() >= 1 && r.arity() <= n_vars)
        .collect();
    assert!(!usable.is_empty(), "language has no relation fitting {n_vars} variables");
    let mut constraints = Vec::with_capacity(n_constraints);
    for _ in 0..n_constraints {
        let (_, relation) = usable[rng.gen_range(0..usable.len())];
        let mut scope: Vec<usize> = Vec::with_capacity(relation.arity());
        while scope.len() < relation.arity() {
            let v = rng.gen_range(0..n_vars);
            if !scope.contains(&v) {
                scope.push(v);
            }
        }
        constraints.push(Constraint {
            scope,
            relation: relation.clone(),
        });
    }
    Instance::new((0..n_vars).map(|v| format!("v{v}")).collect(), constraints)
}
