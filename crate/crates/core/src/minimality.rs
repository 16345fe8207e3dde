//! Instances, constraints, and the (k,l)-minimality-establishing fixpoint.
//!
//! The fixpoint introduces padding constraints over every l-subset of the
//! variables and removes orbits until all constraints agree on every subset
//! of at most k variables. k = 2 is the supported contract; the parameter is
//! kept for testing.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::binary_core::{BinaryCore, CoreSignature};
use crate::error::Error;
use crate::orbits::{enumerate_orbits_filtered, LabelSet, Orbit};
use crate::relalg::Relation;
use crate::Result;

/// A scoped constraint. Scope entries are pairwise distinct variable indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub scope: Vec<usize>,
    pub relation: Relation,
}

/// A CSP instance over named variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub variables: Vec<String>,
    pub constraints: Vec<Constraint>,
}

impl Instance {
    pub fn new(variables: Vec<String>, constraints: Vec<Constraint>) -> Result<Self> {
        let inst = Instance {
            variables,
            constraints,
        };
        inst.check()?;
        Ok(inst)
    }

    fn check(&self) -> Result<()> {
        for (ci, c) in self.constraints.iter().enumerate() {
            for (pos, v) in c.scope.iter().enumerate() {
                if *v >= self.variables.len() {
                    return Err(Error::InvalidInput(format!(
                        "constraint {ci}: variable index {v} out of range"
                    )));
                }
                if c.scope[..pos].contains(v) {
                    return Err(Error::InvalidInput(format!(
                        "constraint {ci}: repeated variable in scope"
                    )));
                }
            }
            if c.relation.arity() != c.scope.len() {
                return Err(Error::ArityMismatch {
                    expected: c.scope.len(),
                    found: c.relation.arity(),
                });
            }
        }
        Ok(())
    }

    pub fn is_trivial(&self) -> bool {
        self.constraints.iter().any(|c| c.relation.is_empty())
    }

    /// True when no constraint forces two scope variables equal.
    pub fn entails_no_equalities(&self, sig: &CoreSignature) -> bool {
        self.constraints
            .iter()
            .all(|c| c.relation.entails_no_equalities(sig))
    }

    /// Positions of `vars` inside the constraint scope, if all present.
    pub(crate) fn positions(constraint: &Constraint, vars: &[usize]) -> Option<Vec<usize>> {
        vars.iter()
            .map(|v| constraint.scope.iter().position(|s| s == v))
            .collect()
    }
}

/// One orbit removal performed by the fixpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub step: usize,
    pub constraint: usize,
    pub removed_orbit: Orbit,
    /// Variable subset whose agreed domain excluded the orbit, and the first
    /// constraint witnessing the exclusion.
    pub because_vars: Vec<usize>,
    pub because_constraint: usize,
}

#[derive(Debug, Clone)]
pub struct MinimizeOutcome {
    pub instance: Instance,
    pub trivial: bool,
    pub trace: Vec<TraceEvent>,
}

/// Order in which subsets are revised. The fixpoint is confluent, so the
/// order only matters for trace diffing and testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RevisionOrder {
    Lexicographic,
    Shuffled(u64),
}

/// Establishes (k,l)-minimality with the default lexicographic revision
/// order.
pub fn establish_minimality(
    inst: &Instance,
    k: usize,
    l: usize,
    core: &BinaryCore,
) -> Result<MinimizeOutcome> {
    establish_minimality_with_order(inst, k, l, core, RevisionOrder::Lexicographic)
}

pub fn establish_minimality_with_order(
    inst: &Instance,
    k: usize,
    l: usize,
    core: &BinaryCore,
    order: RevisionOrder,
) -> Result<MinimizeOutcome> {
    if l < k {
        return Err(Error::InvalidInput(format!("l = {l} must be at least k = {k}")));
    }
    inst.check()?;
    let sig = core.signature();
    let n = inst.variables.len();
    let mut constraints = inst.constraints.clone();

    // Upper bounds on the pair domains from the original constraints; sound
    // seeds for the padding relations since minimization only removes orbits
    // disagreeing with some projection.
    let mut seed_domains: BTreeMap<(usize, usize), LabelSet> = BTreeMap::new();
    if k >= 2 {
        for c in &constraints {
            for (pj, &y) in c.scope.iter().enumerate() {
                for (pi, &x) in c.scope.iter().enumerate().take(pj) {
                    let proj = c.relation.project(&[pi, pj], sig)?.label_set();
                    let key = (x.min(y), x.max(y));
                    let oriented = if x < y { proj } else { proj.map_inverse(sig) };
                    seed_domains
                        .entry(key)
                        .and_modify(|d| *d = d.intersect(oriented))
                        .or_insert(oriented);
                }
            }
        }
    }

    // Padding constraints over every subset of size min(l, n) not already
    // inside an existing scope.
    let m = l.min(n);
    if m >= 1 {
        for subset in subsets_of_size(n, m) {
            let covered = constraints
                .iter()
                .any(|c| subset.iter().all(|v| c.scope.contains(v)));
            if covered {
                continue;
            }
            let filter = |i: usize, j: usize| -> LabelSet {
                let (x, y) = (subset[i], subset[j]);
                let key = (x.min(y), x.max(y));
                match seed_domains.get(&key) {
                    Some(d) => {
                        if x < y {
                            *d
                        } else {
                            d.map_inverse(sig)
                        }
                    }
                    None => LabelSet::full(sig),
                }
            };
            let relation = Relation::new(m, enumerate_orbits_filtered(core, m, &filter))?;
            constraints.push(Constraint {
                scope: subset,
                relation,
            });
        }
    }

    // Subsets of size <= k contained in at least one scope, in canonical
    // ascending order; singletons only propagate emptiness.
    let mut subsets: BTreeSet<Vec<usize>> = BTreeSet::new();
    for c in &constraints {
        let mut sorted = c.scope.clone();
        sorted.sort_unstable();
        for size in 1..=k.min(sorted.len()) {
            collect_subsets(&sorted, size, &mut subsets);
        }
    }
    let mut subsets: Vec<Vec<usize>> = subsets.into_iter().collect();
    if let RevisionOrder::Shuffled(seed) = order {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        subsets.shuffle(&mut rng);
    }

    let mut trace = Vec::new();
    let mut step = 0usize;
    let mut changed = true;
    while changed {
        changed = false;
        for vars in &subsets {
            let members: Vec<usize> = (0..constraints.len())
                .filter(|ci| vars.iter().all(|v| constraints[*ci].scope.contains(v)))
                .collect();
            if members.len() < 2 {
                continue;
            }
            // Agreed domain: intersection of all projections.
            let mut domain: Option<Relation> = None;
            for &ci in &members {
                let positions = self_positions(&constraints[ci], vars);
                let proj = constraints[ci].relation.project(&positions, sig)?;
                domain = Some(match domain {
                    None => proj,
                    Some(d) => d.combine(&proj, crate::relalg::SetOp::And)?,
                });
            }
            let domain = domain.expect("members nonempty");
            for &ci in &members {
                let positions = self_positions(&constraints[ci], vars);
                let removed: Vec<Orbit> = constraints[ci]
                    .relation
                    .orbits()
                    .filter(|o| {
                        !domain.contains(&crate::orbits::restrict_orbit(o, &positions, sig))
                    })
                    .cloned()
                    .collect();
                if removed.is_empty() {
                    continue;
                }
                changed = true;
                let mut kept = constraints[ci].relation.clone();
                for orbit in removed {
                    let restricted = crate::orbits::restrict_orbit(&orbit, &positions, sig);
                    let witness = members
                        .iter()
                        .copied()
                        .find(|&cj| {
                            cj != ci && {
                                let pos = self_positions(&constraints[cj], vars);
                                constraints[cj]
                                    .relation
                                    .project(&pos, sig)
                                    .map(|p| !p.contains(&restricted))
                                    .unwrap_or(false)
                            }
                        })
                        .unwrap_or(ci);
                    kept = kept.combine(
                        &Relation::new(orbit.arity(), [orbit.clone()])?,
                        crate::relalg::SetOp::Minus,
                    )?;
                    trace.push(TraceEvent {
                        step,
                        constraint: ci,
                        removed_orbit: orbit,
                        because_vars: vars.clone(),
                        because_constraint: witness,
                    });
                    step += 1;
                }
                constraints[ci].relation = kept;
            }
        }
    }

    let instance = Instance {
        variables: inst.variables.clone(),
        constraints,
    };
    let trivial = instance.is_trivial();
    Ok(MinimizeOutcome {
        instance,
        trivial,
        trace,
    })
}

fn self_positions(constraint: &Constraint, vars: &[usize]) -> Vec<usize> {
    vars.iter()
        .map(|v| {
            constraint
                .scope
                .iter()
                .position(|s| s == v)
                .expect("membership checked")
        })
        .collect()
}

pub(crate) fn subsets_of_size(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(size);
    fn rec(n: usize, size: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == size {
            out.push(current.clone());
            return;
        }
        for v in start..n {
            current.push(v);
            rec(n, size, v + 1, current, out);
            current.pop();
        }
    }
    rec(n, size, 0, &mut current, &mut out);
    out
}

fn collect_subsets(sorted: &[usize], size: usize, out: &mut BTreeSet<Vec<usize>>) {
    let mut current = Vec::with_capacity(size);
    fn rec(
        sorted: &[usize],
        size: usize,
        start: usize,
        current: &mut Vec<usize>,
        out: &mut BTreeSet<Vec<usize>>,
    ) {
        if current.len() == size {
            out.insert(current.clone());
            return;
        }
        for idx in start..sorted.len() {
            current.push(sorted[idx]);
            rec(sorted, size, idx + 1, current, out);
            current.pop();
        }
    }
    rec(sorted, size, 0, &mut current, out);
}

/// The common projection of the minimal instance onto the ordered pair
/// `(x, y)`. Disagreement between constraints signals a non-minimal input.
pub fn pair_domain(inst: &Instance, x: usize, y: usize, sig: &CoreSignature) -> Result<Relation> {
    if x == y {
        return Err(Error::InvalidInput(
            "pair domain of a variable with itself is undefined".into(),
        ));
    }
    let mut domain: Option<Relation> = None;
    for c in &inst.constraints {
        if let Some(positions) = Instance::positions(c, &[x, y]) {
            let proj = c.relation.project(&positions, sig)?;
            match &domain {
                None => domain = Some(proj),
                Some(d) if *d == proj => {}
                Some(_) => {
                    return Err(Error::NotMinimal(format!(
                        "constraints disagree on pair ({}, {})",
                        inst.variables[x], inst.variables[y]
                    )))
                }
            }
        }
    }
    domain.ok_or_else(|| {
        Error::NotMinimal(format!(
            "no constraint covers pair ({}, {})",
            inst.variables[x], inst.variables[y]
        ))
    })
}

/// Checks both conditions of the (k,l)-minimality definition exactly.
pub fn verify_minimality(inst: &Instance, k: usize, l: usize, sig: &CoreSignature) -> bool {
    let n = inst.variables.len();
    // Every subset of at most l variables lies inside some scope; it is
    // enough to check the subsets of size min(l, n).
    let m = l.min(n);
    for subset in subsets_of_size(n, m) {
        if !inst
            .constraints
            .iter()
            .any(|c| subset.iter().all(|v| c.scope.contains(v)))
        {
            return false;
        }
    }
    // All constraints agree on every subset of at most k variables.
    let mut subsets: BTreeSet<Vec<usize>> = BTreeSet::new();
    for c in &inst.constraints {
        let mut sorted = c.scope.clone();
        sorted.sort_unstable();
        for size in 1..=k.min(sorted.len()) {
            collect_subsets(&sorted, size, &mut subsets);
        }
    }
    for vars in subsets {
        let mut domain: Option<Relation> = None;
        for c in &inst.constraints {
            if let Some(positions) = Instance::positions(c, &vars) {
                let proj = match c.relation.project(&positions, sig) {
                    Ok(p) => p,
                    Err(_) => return false,
                };
                match &domain {
                    None => domain = Some(proj),
                    Some(d) if *d == proj => {}
                    Some(_) => return false,
                }
            }
        }
    }
    true
}

/// Merges variables according to `class_of` (a dense class id per variable).
/// Constraints are rewritten by restricting to orbits where merged scope
/// positions coincide and projecting to the first occurrence of each class.
pub fn quotient_instance(
    inst: &Instance,
    class_of: &[usize],
    sig: &CoreSignature,
) -> Result<Instance> {
    let class_count = class_of.iter().map(|c| c + 1).max().unwrap_or(0);
    // Representative variable name: the first variable of each class.
    let mut names: Vec<String> = vec![String::new(); class_count];
    for (v, &cls) in class_of.iter().enumerate() {
        if names[cls].is_empty() {
            names[cls] = inst.variables[v].clone();
        }
    }
    let mut constraints = Vec::with_capacity(inst.constraints.len());
    for c in &inst.constraints {
        let classes: Vec<usize> = c.scope.iter().map(|v| class_of[*v]).collect();
        let mut keep_positions: Vec<usize> = Vec::new();
        let mut scope: Vec<usize> = Vec::new();
        for (pos, cls) in classes.iter().enumerate() {
            if !scope.contains(cls) {
                scope.push(*cls);
                keep_positions.push(pos);
            }
        }
        let mut kept = Relation::empty(keep_positions.len());
        'orbit: for o in c.relation.orbits() {
            // Merged positions must carry equality inside the orbit.
            for (pa, ca) in classes.iter().enumerate() {
                for (pb, cb) in classes.iter().enumerate().take(pa) {
                    if ca == cb && o.block_of(pa) != o.block_of(pb) {
                        continue 'orbit;
                    }
                }
            }
            kept.insert(crate::orbits::restrict_orbit(o, &keep_positions, sig))?;
        }
        constraints.push(Constraint {
            scope,
            relation: kept,
        });
    }
    Instance::new(names, constraints)
}

/// Unordered pairs whose domain is exactly `{=}`, calling for a quotient.
pub fn eq_only_pairs(inst: &Instance, sig: &CoreSignature) -> Result<Vec<(usize, usize)>> {
    let n = inst.variables.len();
    let mut out = Vec::new();
    for x in 0..n {
        for y in (x + 1)..n {
            let domain = pair_domain(inst, x, y, sig)?;
            if domain.label_set() == LabelSet::eq_only() {
                out.push((x, y));
            }
        }
    }
    Ok(out)
}
