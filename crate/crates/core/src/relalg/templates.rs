//! Primitive-positive construction templates and the existential-join engine
//! evaluating them at the orbit level.
//!
//! A template names a conjunction of relation atoms over a bounded point set,
//! some points visible and the rest existentially quantified. The engine
//! computes the set of visible orbits for which some total orbit over all
//! points restricts into every atom; realizability of the total orbit is
//! checked against the core's bounds whenever the quotient is large enough to
//! contain one.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use crate::binary_core::{is_liberal, BinaryCore, FiniteStructure, OrbitalId};
use crate::error::Error;
use crate::orbits::Orbit;
use crate::relalg::Relation;
use crate::Result;

/// Hard cap on the number of points an existential join may use. All
/// built-in templates need at most 6; one headroom point is left for
/// experiments.
pub const MAX_JOIN_POINTS: usize = 7;

/// Bumped whenever the built-in template library changes shape.
pub const TEMPLATE_VERSION: u32 = 1;

/// A pp-construction template: atoms `(slot, coordinates)` over `points`
/// points, of which `visible` (in order) form the result tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PpTemplate {
    pub id: String,
    pub points: usize,
    pub visible: Vec<usize>,
    pub atoms: Vec<(usize, Vec<usize>)>,
}

impl PpTemplate {
    pub fn custom(
        id: impl Into<String>,
        points: usize,
        visible: Vec<usize>,
        atoms: Vec<(usize, Vec<usize>)>,
    ) -> Result<Self> {
        if points > MAX_JOIN_POINTS {
            return Err(Error::CapExceeded {
                what: "existential join points",
                requested: points,
                limit: MAX_JOIN_POINTS,
            });
        }
        for p in visible.iter().chain(atoms.iter().flat_map(|(_, c)| c.iter())) {
            if *p >= points {
                return Err(Error::CoordinateOutOfRange {
                    index: *p,
                    arity: points,
                });
            }
        }
        Ok(PpTemplate {
            id: id.into(),
            points,
            visible,
            atoms,
        })
    }

    pub fn slot_count(&self) -> usize {
        self.atoms.iter().map(|(s, _)| s + 1).max().unwrap_or(0)
    }

    /// Evaluates the template against relations bound to its slots.
    pub fn apply(&self, core: &BinaryCore, slots: &[&Relation]) -> Result<Relation> {
        if slots.len() != self.slot_count() {
            return Err(Error::InvalidInput(format!(
                "template `{}` needs {} relations, got {}",
                self.id,
                self.slot_count(),
                slots.len()
            )));
        }
        let atoms: Vec<(&Relation, &[usize])> = self
            .atoms
            .iter()
            .map(|(slot, coords)| (slots[*slot], coords.as_slice()))
            .collect();
        exist_join(core, &atoms, &self.visible)
    }
}

fn builtin(id: &str, points: usize, visible: &[usize], atoms: &[(usize, &[usize])]) -> PpTemplate {
    PpTemplate::custom(
        id,
        points,
        visible.to_vec(),
        atoms.iter().map(|(s, c)| (*s, c.to_vec())).collect(),
    )
    .expect("built-in template is well formed")
}

fn builtins() -> &'static Vec<PpTemplate> {
    static TEMPLATES: OnceLock<Vec<PpTemplate>> = OnceLock::new();
    TEMPLATES.get_or_init(|| {
        vec![
            // ∃y R1(x1,x2,y) ∧ R2(y,x2,x3)
            builtin("bowtie_ternary", 4, &[0, 1, 2], &[(0, &[0, 1, 3]), (1, &[3, 1, 2])]),
            // ∃y1 y2 R1(x1,x2,y1,y2) ∧ R2(y2,y1,x3,x4)
            builtin(
                "bowtie_quaternary",
                6,
                &[0, 1, 2, 3],
                &[(0, &[0, 1, 4, 5]), (1, &[5, 4, 2, 3])],
            ),
            // ∃y1 y2 R1(x1,x2,y1,y2) ∧ R2(y2,y1,x2,x3)
            builtin("bowtie3", 5, &[0, 1, 2], &[(0, &[0, 1, 3, 4]), (1, &[4, 3, 1, 2])]),
            // ∃y1 y2 R1(x1,x2,y1,y2) ∧ R2(y1,y2,x3,x4)
            builtin(
                "compose44_aligned",
                6,
                &[0, 1, 2, 3],
                &[(0, &[0, 1, 4, 5]), (1, &[4, 5, 2, 3])],
            ),
            // ∃y R1(x1,x2,y,x3) ∧ R2(y,x3,x4)
            builtin(
                "compose43_aligned",
                5,
                &[0, 1, 2, 3],
                &[(0, &[0, 1, 4, 2]), (1, &[4, 2, 3])],
            ),
            // ∃y R1(x1,x2,x3,y) ∧ R2(y,x3,x4)
            builtin(
                "compose43_crossed",
                5,
                &[0, 1, 2, 3],
                &[(0, &[0, 1, 2, 4]), (1, &[4, 2, 3])],
            ),
            // ∃y R1(x1,x2,y) ∧ R2(x2,y,x3,x4)
            builtin(
                "compose34_aligned",
                5,
                &[0, 1, 2, 3],
                &[(0, &[0, 1, 4]), (1, &[1, 4, 2, 3])],
            ),
            // ∃y R1(x1,x2,y) ∧ R2(y,x2,x3,x4)
            builtin(
                "compose34_crossed",
                5,
                &[0, 1, 2, 3],
                &[(0, &[0, 1, 4]), (1, &[4, 1, 2, 3])],
            ),
            // R1(x1,x2,x3) ∧ R2(x2,x3,x4), no quantified points
            builtin(
                "compose33_aligned",
                4,
                &[0, 1, 2, 3],
                &[(0, &[0, 1, 2]), (1, &[1, 2, 3])],
            ),
            // ∃x0 O1(x0,x1) ∧ O2(x0,x2): the distinctness witness
            builtin("psi_distinct", 3, &[0, 1], &[(0, &[2, 0]), (1, &[2, 1])]),
            // ∃y R1(x1,x2,y) ∧ R2(x3,x2,y)
            builtin("mirror_join", 4, &[0, 1, 2], &[(0, &[0, 1, 3]), (1, &[2, 1, 3])]),
            // ∃y R(x1,x2,y) ∧ O(x3,y)
            builtin(
                "tail_orbital_ternary",
                4,
                &[0, 1, 2],
                &[(0, &[0, 1, 3]), (1, &[2, 3])],
            ),
            // ∃y R(x1,x2,x3,y) ∧ O(x4,y)
            builtin(
                "tail_orbital_quaternary",
                5,
                &[0, 1, 2, 3],
                &[(0, &[0, 1, 2, 4]), (1, &[3, 4])],
            ),
            // ∃y R(x1,x2,x3,y) ∧ O(y,x4)
            builtin(
                "head_orbital_quaternary",
                5,
                &[0, 1, 2, 3],
                &[(0, &[0, 1, 2, 4]), (1, &[4, 3])],
            ),
        ]
    })
}

pub fn template_by_id(id: &str) -> Option<&'static PpTemplate> {
    builtins().iter().find(|t| t.id == id)
}

pub fn template_ids() -> Vec<&'static str> {
    builtins().iter().map(|t| t.id.as_str()).collect()
}

/// `R1 ⋈ R2` for two ternary or two quaternary relations.
pub fn bowtie(core: &BinaryCore, r1: &Relation, r2: &Relation) -> Result<Relation> {
    let template = match (r1.arity(), r2.arity()) {
        (3, 3) => template_by_id("bowtie_ternary").unwrap(),
        (4, 4) => template_by_id("bowtie_quaternary").unwrap(),
        (a, b) => {
            return Err(Error::InvalidInput(format!(
                "bowtie needs two ternary or two quaternary relations, got {a} and {b}"
            )))
        }
    };
    template.apply(core, &[r1, r2])
}

/// `R1 ⋈₃ R2` for two quaternary relations; the result is ternary.
pub fn bowtie3(core: &BinaryCore, r1: &Relation, r2: &Relation) -> Result<Relation> {
    if r1.arity() != 4 || r2.arity() != 4 {
        return Err(Error::InvalidInput(format!(
            "bowtie3 needs two quaternary relations, got {} and {}",
            r1.arity(),
            r2.arity()
        )));
    }
    template_by_id("bowtie3").unwrap().apply(core, &[r1, r2])
}

/// Evaluates an existential join: atoms constrain the labeling of a point
/// set, `visible` names the result coordinates. All partitions of the point
/// set are considered, so coincidences between points not forced by any atom
/// are found too. See the module docs for the realizability contract.
pub fn exist_join(
    core: &BinaryCore,
    atoms: &[(&Relation, &[usize])],
    visible: &[usize],
) -> Result<Relation> {
    let points = atoms
        .iter()
        .flat_map(|(_, coords)| coords.iter())
        .chain(visible.iter())
        .max()
        .map(|m| m + 1)
        .unwrap_or(0);
    if points > MAX_JOIN_POINTS {
        return Err(Error::CapExceeded {
            what: "existential join points",
            requested: points,
            limit: MAX_JOIN_POINTS,
        });
    }
    for (rel, coords) in atoms {
        if rel.arity() != coords.len() {
            return Err(Error::ArityMismatch {
                expected: rel.arity(),
                found: coords.len(),
            });
        }
    }
    for (pos, v) in visible.iter().enumerate() {
        if visible[..pos].contains(v) {
            return Err(Error::InvalidInput("visible coordinates must be distinct".into()));
        }
    }

    let mut join = Join {
        core,
        liberal: is_liberal(core),
        min_bound: core
            .bounds()
            .iter()
            .map(FiniteStructure::point_count)
            .min()
            .unwrap_or(usize::MAX),
        atoms,
        visible,
        out: BTreeSet::new(),
    };
    // Outer loop: every partition of the point set, as a restricted growth
    // string.
    let mut rgs = vec![0u8; points];
    join.partitions(&mut rgs, 1);
    if points == 0 {
        return Relation::new(visible.len(), BTreeSet::new());
    }
    Relation::new(visible.len(), join.out)
}

struct Join<'a> {
    core: &'a BinaryCore,
    liberal: bool,
    min_bound: usize,
    atoms: &'a [(&'a Relation, &'a [usize])],
    visible: &'a [usize],
    out: BTreeSet<Orbit>,
}

fn slot(a: usize, b: usize) -> usize {
    debug_assert!(a < b);
    b * (b - 1) / 2 + a
}

impl<'a> Join<'a> {
    fn partitions(&mut self, rgs: &mut Vec<u8>, depth: usize) {
        if rgs.is_empty() {
            return;
        }
        if depth == rgs.len() {
            self.with_partition(rgs);
            return;
        }
        let max_block = *rgs[..depth].iter().max().unwrap();
        for b in 0..=(max_block + 1) {
            rgs[depth] = b;
            self.partitions(rgs, depth + 1);
        }
        rgs[depth] = 0;
    }

    fn with_partition(&mut self, rgs: &[u8]) {
        // Atom candidates: member orbits whose equality pattern matches the
        // partition restricted to the atom coordinates.
        let mut candidates: Vec<Vec<&'a Orbit>> = Vec::with_capacity(self.atoms.len());
        for (rel, coords) in self.atoms {
            let matching: Vec<&'a Orbit> = rel
                .orbits()
                .filter(|o| {
                    (0..coords.len()).all(|b| {
                        (0..b).all(|a| {
                            (o.block_of(a) == o.block_of(b))
                                == (rgs[coords[a]] == rgs[coords[b]])
                        })
                    })
                })
                .collect();
            if matching.is_empty() {
                return;
            }
            candidates.push(matching);
        }
        let blocks = rgs.iter().map(|b| *b as usize + 1).max().unwrap();
        let mut choice: Vec<&Orbit> = Vec::with_capacity(self.atoms.len());
        self.product(rgs, blocks, &candidates, &mut choice);
    }

    fn product(
        &mut self,
        rgs: &[u8],
        blocks: usize,
        candidates: &[Vec<&'a Orbit>],
        choice: &mut Vec<&'a Orbit>,
    ) {
        if choice.len() == candidates.len() {
            self.resolve(rgs, blocks, choice);
            return;
        }
        for orbit in &candidates[choice.len()] {
            choice.push(orbit);
            self.product(rgs, blocks, candidates, choice);
            choice.pop();
        }
    }

    fn resolve(&mut self, rgs: &[u8], blocks: usize, choice: &[&Orbit]) {
        let sig = self.core.signature();
        let mut labels: Vec<Option<OrbitalId>> = vec![None; blocks * blocks.saturating_sub(1) / 2];
        // Orbital constraints, orientation-normalized per block pair.
        for (orbit, (_, coords)) in choice.iter().zip(self.atoms) {
            for b in 0..coords.len() {
                for a in 0..b {
                    if orbit.block_of(a) == orbit.block_of(b) {
                        continue;
                    }
                    let (ba, bb) = (rgs[coords[a]] as usize, rgs[coords[b]] as usize);
                    debug_assert_ne!(ba, bb, "pattern match guarantees distinct blocks");
                    let o = match orbit.pair_label(a, b, sig) {
                        crate::orbits::PairLabel::Orbital(o) => o,
                        crate::orbits::PairLabel::Eq => unreachable!(),
                    };
                    let (lo, hi, oriented) = if ba < bb {
                        (ba, bb, o)
                    } else {
                        (bb, ba, sig.inverse(o))
                    };
                    match labels[slot(lo, hi)] {
                        None => labels[slot(lo, hi)] = Some(oriented),
                        Some(prev) if prev == oriented => {}
                        Some(_) => return,
                    }
                }
            }
        }

        let visible_blocks: BTreeSet<usize> =
            self.visible.iter().map(|v| rgs[*v] as usize).collect();
        let mut free_visible: Vec<usize> = Vec::new();
        let mut free_hidden: Vec<usize> = Vec::new();
        for b in 1..blocks {
            for a in 0..b {
                if labels[slot(a, b)].is_none() {
                    if visible_blocks.contains(&a) && visible_blocks.contains(&b) {
                        free_visible.push(slot(a, b));
                    } else {
                        free_hidden.push(slot(a, b));
                    }
                }
            }
        }

        let block_of_point: Vec<usize> = rgs.iter().map(|b| *b as usize).collect();
        self.enumerate_visible(&mut labels, &free_visible, 0, &free_hidden, &block_of_point);
    }

    fn enumerate_visible(
        &mut self,
        labels: &mut Vec<Option<OrbitalId>>,
        free_visible: &[usize],
        depth: usize,
        free_hidden: &[usize],
        block_of_point: &[usize],
    ) {
        if depth == free_visible.len() {
            if self.realizable(labels, free_hidden) {
                self.emit(labels, block_of_point);
            }
            return;
        }
        for o in self.core.signature().orbitals() {
            labels[free_visible[depth]] = Some(o);
            self.enumerate_visible(labels, free_visible, depth + 1, free_hidden, block_of_point);
        }
        labels[free_visible[depth]] = None;
    }

    /// Whether some completion of the hidden free labels yields a structure
    /// inside the core's age.
    fn realizable(&self, labels: &mut Vec<Option<OrbitalId>>, free_hidden: &[usize]) -> bool {
        let blocks = block_count_of(labels.len());
        if self.liberal && blocks <= 6 {
            return true;
        }
        if blocks < self.min_bound {
            return true;
        }
        self.complete_hidden(labels, free_hidden, 0)
    }

    fn complete_hidden(
        &self,
        labels: &mut Vec<Option<OrbitalId>>,
        free_hidden: &[usize],
        depth: usize,
    ) -> bool {
        if depth == free_hidden.len() {
            let upper: Vec<OrbitalId> = labels.iter().map(|l| l.expect("total")).collect();
            let blocks = block_count_of(upper.len());
            let structure = FiniteStructure::from_upper_triangle(blocks, upper)
                .expect("triangular label vector");
            return crate::binary_core::embeds_into_core(&structure, self.core);
        }
        for o in self.core.signature().orbitals() {
            labels[free_hidden[depth]] = Some(o);
            if self.complete_hidden(labels, free_hidden, depth + 1) {
                labels[free_hidden[depth]] = None;
                return true;
            }
        }
        labels[free_hidden[depth]] = None;
        false
    }

    fn emit(&mut self, labels: &[Option<OrbitalId>], block_of_point: &[usize]) {
        let sig = self.core.signature();
        // Canonical partition of the visible coordinates.
        let mut canon: Vec<u8> = Vec::with_capacity(self.visible.len());
        let mut seen: Vec<usize> = Vec::new();
        for &v in self.visible {
            let b = block_of_point[v];
            let id = match seen.iter().position(|s| *s == b) {
                Some(pos) => pos,
                None => {
                    seen.push(b);
                    seen.len() - 1
                }
            };
            canon.push(id as u8);
        }
        let vis_blocks = seen.len();
        let slot = |a: usize, b: usize| -> usize { b * (b - 1) / 2 + a };
        let mut pairs: Vec<(usize, usize, crate::orbits::PairLabel)> = Vec::new();
        for b in 1..vis_blocks {
            for a in 0..b {
                let (ga, gb) = (seen[a], seen[b]);
                let o = if ga < gb {
                    labels[slot(ga, gb)].expect("visible pair labeled")
                } else {
                    sig.inverse(labels[slot(gb, ga)].expect("visible pair labeled"))
                };
                // Representative coordinates for the canonical pair.
                let i = canon.iter().position(|c| *c as usize == a).unwrap();
                let j = canon.iter().position(|c| *c as usize == b).unwrap();
                pairs.push((i, j, crate::orbits::PairLabel::Orbital(o)));
            }
        }
        let pattern: Vec<usize> = canon.iter().map(|c| *c as usize).collect();
        let orbit = crate::orbits::canonicalize(self.visible.len(), &pattern, &pairs, sig)
            .expect("join output is coherent");
        self.out.insert(orbit);
    }
}

fn block_count_of(slots: usize) -> usize {
    // Inverse triangular number: slots = b(b-1)/2.
    let mut b = 0usize;
    while b * b.saturating_sub(1) / 2 < slots {
        b += 1;
    }
    if b * b.saturating_sub(1) / 2 == slots {
        b.max(1)
    } else {
        panic!("not a triangular number: {slots}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binary_core::fixtures::*;
    use crate::orbits::{LabelSet, PairLabel};

    #[test]
    fn psi_template_defines_distinctness() {
        // Over a liberal core with two distinct anti-reflexive orbitals the
        // witness join yields exactly the disequality relation.
        for core in [graph_core(), digraph_core()] {
            let sig = core.signature();
            let o1 = Relation::from_label_set(LabelSet::singleton(PairLabel::Orbital(
                sig.orbitals().next().unwrap(),
            )));
            let o2 = Relation::from_label_set(LabelSet::singleton(PairLabel::Orbital(
                sig.orbitals().nth(1).unwrap(),
            )));
            let psi = template_by_id("psi_distinct").unwrap();
            let result = psi.apply(&core, &[&o1, &o2]).unwrap();
            assert_eq!(result.label_set(), LabelSet::all_orbitals(sig));
        }
    }

    #[test]
    fn bowtie_of_full_relations_is_full() {
        let core = graph_core();
        let full = Relation::full(&core, 3).unwrap();
        let result = bowtie(&core, &full, &full).unwrap();
        assert_eq!(result, full);
    }

    #[test]
    fn join_of_full_relations_is_full() {
        let core = graph_core();
        let full = Relation::full(&core, 3).unwrap();
        let joined = exist_join(
            &core,
            &[(&full, &[0, 1, 2]), (&full, &[1, 2, 3])],
            &[0, 1, 2, 3],
        )
        .unwrap();
        assert_eq!(joined, Relation::full(&core, 4).unwrap());
    }

    #[test]
    fn bounds_restrict_joins() {
        // Over the two-cliques core, composing E with E cannot reach N.
        let core = two_cliques_core();
        let sig = core.signature();
        let e = sig.by_name("E").unwrap();
        let e_rel = Relation::from_label_set(LabelSet::singleton(PairLabel::Orbital(e)));
        // ∃y E(x1,y) ∧ E(y,x2): same clique, including x1 = x2.
        let joined = exist_join(&core, &[(&e_rel, &[0, 2]), (&e_rel, &[2, 1])], &[0, 1]).unwrap();
        let mut same_clique = LabelSet::singleton(PairLabel::Orbital(e));
        same_clique.insert(PairLabel::Eq);
        assert_eq!(joined.label_set(), same_clique);
        // Over the liberal graph core the same join reaches everything.
        let liberal = graph_core();
        let lsig = liberal.signature();
        let le = Relation::from_label_set(LabelSet::singleton(PairLabel::Orbital(
            lsig.by_name("E").unwrap(),
        )));
        let joined = exist_join(&liberal, &[(&le, &[0, 2]), (&le, &[2, 1])], &[0, 1]).unwrap();
        assert_eq!(joined.label_set(), LabelSet::full(lsig));
    }

    #[test]
    fn point_cap_is_enforced() {
        let core = graph_core();
        let full = Relation::full(&core, 3).unwrap();
        let err = exist_join(&core, &[(&full, &[0, 1, 7])], &[0]);
        assert!(matches!(err, Err(Error::CapExceeded { .. })));
        assert!(PpTemplate::custom("big", 8, vec![0], vec![]).is_err());
    }

    #[test]
    fn mirror_join_forces_shared_witness() {
        // With R' = E(x1,x2) ∧ x2=x3, the mirrored join pins y to x2 on both
        // sides and produces E(x1,x2) ∧ E(x3,x2) over all free (1,3) labels.
        let core = graph_core();
        let sig = core.signature();
        let e = sig.by_name("E").unwrap();
        let r = Relation::from_formula(&core, 3, "E(1,2) & 2=3").unwrap();
        let joined = template_by_id("mirror_join")
            .unwrap()
            .apply(&core, &[&r, &r])
            .unwrap();
        for o in joined.orbits() {
            assert_eq!(o.pair_label(0, 1, sig), PairLabel::Orbital(e));
            assert_eq!(o.pair_label(2, 1, sig), PairLabel::Orbital(e));
        }
        // x1 and x3 may coincide or carry any orbital: 3 orbits total.
        assert_eq!(joined.orbit_count(), 3);
    }
}
