//! Relations as finite orbit sets, with projection, Boolean algebra,
//! entailment, implication classification and a bound-aware existential-join
//! engine evaluating the pp-construction templates.

mod formula;
mod implication;
mod templates;

pub use formula::parse_dnf;
pub use implication::{
    circ, circ_from_relation, circ_power, circ_template_id, classify_all, classify_implication,
    Arrow, ImplicationDesc,
};
pub use templates::{
    bowtie, bowtie3, exist_join, template_by_id, template_ids, PpTemplate, MAX_JOIN_POINTS,
    TEMPLATE_VERSION,
};

use std::collections::BTreeSet;
use std::fmt;

use crate::binary_core::{BinaryCore, CoreSignature};
use crate::error::Error;
use crate::orbits::{
    enumerate_orbits, enumerate_orbits_filtered, restrict_orbit, LabelSet, Orbit, PairFilter,
    PairLabel,
};
use crate::Result;

/// Boolean combination mode for [`Relation::combine`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetOp {
    And,
    Or,
    Minus,
}

/// A first-order definable relation over a binary core: a finite, canonical
/// set of orbits of fixed arity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Relation {
    arity: usize,
    orbits: BTreeSet<Orbit>,
}

impl Relation {
    pub fn new(arity: usize, orbits: impl IntoIterator<Item = Orbit>) -> Result<Self> {
        let orbits: BTreeSet<Orbit> = orbits.into_iter().collect();
        for o in &orbits {
            if o.arity() != arity {
                return Err(Error::ArityMismatch {
                    expected: arity,
                    found: o.arity(),
                });
            }
        }
        Ok(Relation { arity, orbits })
    }

    pub fn empty(arity: usize) -> Self {
        Relation {
            arity,
            orbits: BTreeSet::new(),
        }
    }

    /// The full relation `A^k`: every orbit realizable over the core.
    pub fn full(core: &BinaryCore, arity: usize) -> Result<Self> {
        Ok(Relation {
            arity,
            orbits: enumerate_orbits(core, arity)?,
        })
    }

    /// All realizable orbits of arity `k` whose pair labels pass `filter`.
    pub fn from_pair_filter(core: &BinaryCore, arity: usize, filter: &impl PairFilter) -> Self {
        Relation {
            arity,
            orbits: enumerate_orbits_filtered(core, arity, filter),
        }
    }

    /// Compiles a quantifier-free DNF formula over orbital atoms `ORB(i,j)`,
    /// equalities `i=j` and disequalities `i!=j` (1-based coordinates).
    pub fn from_formula(core: &BinaryCore, arity: usize, text: &str) -> Result<Self> {
        let dnf = formula::parse_dnf(text, arity, core.signature())?;
        let sig = core.signature();
        let orbits = enumerate_orbits(core, arity)?
            .into_iter()
            .filter(|o| formula::eval_dnf(&dnf, o, sig))
            .collect();
        Ok(Relation { arity, orbits })
    }

    /// The binary relation consisting of the 2-orbits in `set`.
    pub fn from_label_set(set: LabelSet) -> Self {
        Relation {
            arity: 2,
            orbits: set.iter().map(Orbit::pair).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn orbit_count(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    pub fn orbits(&self) -> impl Iterator<Item = &Orbit> {
        self.orbits.iter()
    }

    pub fn contains(&self, orbit: &Orbit) -> bool {
        self.orbits.contains(orbit)
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.arity == other.arity && self.orbits.is_subset(&other.orbits)
    }

    pub fn is_proper_subset(&self, other: &Relation) -> bool {
        self.is_subset(other) && self.orbits != other.orbits
    }

    pub fn insert(&mut self, orbit: Orbit) -> Result<()> {
        if orbit.arity() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: orbit.arity(),
            });
        }
        self.orbits.insert(orbit);
        Ok(())
    }

    /// For binary relations: the set of pair labels present.
    pub fn label_set(&self) -> LabelSet {
        debug_assert_eq!(self.arity, 2);
        let mut set = LabelSet::EMPTY;
        for o in &self.orbits {
            if let Some(l) = o.as_pair_label() {
                set.insert(l);
            }
        }
        set
    }

    /// Membership of a pair label in a binary relation.
    pub fn contains_label(&self, label: PairLabel) -> bool {
        self.orbits.contains(&Orbit::pair(label))
    }

    /// Orbit-wise projection to `indices` (ordered, repetitions allowed).
    pub fn project(&self, indices: &[usize], sig: &CoreSignature) -> Result<Relation> {
        for &i in indices {
            if i >= self.arity {
                return Err(Error::CoordinateOutOfRange {
                    index: i,
                    arity: self.arity,
                });
            }
        }
        Ok(Relation {
            arity: indices.len(),
            orbits: self
                .orbits
                .iter()
                .map(|o| restrict_orbit(o, indices, sig))
                .collect(),
        })
    }

    /// Coordinate permutation: the result's coordinate `i` is the source
    /// coordinate `perm[i]`, so `permute(R, [2,1,0])` reverses a ternary R.
    pub fn permute(&self, perm: &[usize], sig: &CoreSignature) -> Result<Relation> {
        if perm.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: perm.len(),
            });
        }
        let mut seen = vec![false; self.arity];
        for &p in perm {
            if p >= self.arity || seen[p] {
                return Err(Error::InvalidInput(format!("not a permutation: {perm:?}")));
            }
            seen[p] = true;
        }
        self.project(perm, sig)
    }

    pub fn combine(&self, other: &Relation, op: SetOp) -> Result<Relation> {
        if self.arity != other.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: other.arity,
            });
        }
        let orbits = match op {
            SetOp::And => self.orbits.intersection(&other.orbits).cloned().collect(),
            SetOp::Or => self.orbits.union(&other.orbits).cloned().collect(),
            SetOp::Minus => self.orbits.difference(&other.orbits).cloned().collect(),
        };
        Ok(Relation {
            arity: self.arity,
            orbits,
        })
    }

    /// `C⁻¹(x, y) ≡ C(y, x)` for binary relations.
    pub fn inverse_binary(&self, sig: &CoreSignature) -> Result<Relation> {
        if self.arity != 2 {
            return Err(Error::ArityMismatch {
                expected: 2,
                found: self.arity,
            });
        }
        Ok(Relation::from_label_set(self.label_set().map_inverse(sig)))
    }

    /// True when no coordinate pair is forced equal across all orbits.
    pub fn entails_no_equalities(&self, _sig: &CoreSignature) -> bool {
        if self.orbits.is_empty() {
            // The empty relation entails everything.
            return false;
        }
        for j in 0..self.arity {
            for i in 0..j {
                if self
                    .orbits
                    .iter()
                    .all(|o| o.block_of(i) == o.block_of(j))
                {
                    return false;
                }
            }
        }
        true
    }

    /// Whether every orbit with `(i,j)`-label in `c` has `(k,l)`-label in `d`.
    pub fn entails_implication(
        &self,
        c: &Relation,
        premise: (usize, usize),
        d: &Relation,
        conclusion: (usize, usize),
        sig: &CoreSignature,
    ) -> bool {
        self.orbits.iter().all(|o| {
            !c.contains_label(o.pair_label(premise.0, premise.1, sig))
                || d.contains_label(o.pair_label(conclusion.0, conclusion.1, sig))
        })
    }

    /// Entailment with the strict side conditions `C ⊊ proj R`, `D ⊊ proj R`.
    pub fn efficiently_entails(
        &self,
        c: &Relation,
        premise: (usize, usize),
        d: &Relation,
        conclusion: (usize, usize),
        sig: &CoreSignature,
    ) -> bool {
        if c.is_empty() {
            return false;
        }
        let proj_c = self
            .project(&[premise.0, premise.1], sig)
            .expect("premise indices in range");
        let proj_d = self
            .project(&[conclusion.0, conclusion.1], sig)
            .expect("conclusion indices in range");
        c.is_proper_subset(&proj_c)
            && d.is_proper_subset(&proj_d)
            && self.entails_implication(c, premise, d, conclusion, sig)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-ary{{", self.arity)?;
        for (i, o) in self.orbits.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{o}")?;
        }
        write!(f, "}}")
    }
}

/// All orbits of `R(x1..xk)` whose pair `(i,j)` is labeled within `c` and
/// pair `(k,l)` within `d` — the building block `C(x_i,x_j) ∧ D(x_k,x_l)`.
pub fn conjunction_of_pairs(
    core: &BinaryCore,
    arity: usize,
    constraints: &[((usize, usize), LabelSet)],
) -> Relation {
    let sig = core.signature();
    let full = LabelSet::full(sig);
    let filter = |i: usize, j: usize| {
        let mut allowed = full;
        for &((a, b), set) in constraints {
            if (a, b) == (i, j) {
                allowed = allowed.intersect(set);
            } else if (a, b) == (j, i) {
                allowed = allowed.intersect(set.map_inverse(sig));
            }
        }
        allowed
    };
    Relation::from_pair_filter(core, arity, &filter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binary_core::fixtures::*;

    fn alternation_relation(core: &BinaryCore) -> Relation {
        Relation::from_formula(core, 3, "(E(1,2) & N(2,3)) | (N(1,2) & E(2,3))").unwrap()
    }

    #[test]
    fn formula_compiles_to_expected_orbit_families() {
        let liberal = graph_core();
        let r = alternation_relation(&liberal);
        // Injective only: the mixed labels forbid any merge; (1,3) free.
        assert_eq!(r.orbit_count(), 4);
        assert!(r.orbits().all(|o| o.is_injective()));

        let eq = Relation::from_formula(&liberal, 2, "1=2").unwrap();
        assert_eq!(eq.orbit_count(), 1);
        assert!(eq.contains_label(PairLabel::Eq));
    }

    #[test]
    fn alternation_projection_over_two_cliques_is_n_only() {
        let core = two_cliques_core();
        let sig = core.signature();
        let n = sig.by_name("N").unwrap();
        let r = alternation_relation(&core);
        assert_eq!(r.orbit_count(), 2);
        let p13 = r.project(&[0, 2], sig).unwrap();
        assert_eq!(p13.label_set(), LabelSet::singleton(PairLabel::Orbital(n)));
        // Identity projection.
        assert_eq!(r.project(&[0, 1, 2], sig).unwrap(), r);
        // Full ternary relation projects onto the full binary relation.
        let full3 = Relation::full(&core, 3).unwrap();
        let full2 = Relation::full(&core, 2).unwrap();
        assert_eq!(full3.project(&[0, 1], sig).unwrap(), full2);
    }

    #[test]
    fn alternation_is_reversal_symmetric() {
        let core = two_cliques_core();
        let sig = core.signature();
        let r = alternation_relation(&core);
        assert_eq!(r.permute(&[2, 1, 0], sig).unwrap(), r);
    }

    #[test]
    fn inverse_binary_on_digraph_orbitals() {
        let core = digraph_core();
        let sig = core.signature();
        let arc = sig.by_name("arc").unwrap();
        let arc_inv = sig.by_name("arc_inv").unwrap();
        let rel = Relation::from_label_set(LabelSet::singleton(PairLabel::Orbital(arc)));
        assert_eq!(
            rel.inverse_binary(sig).unwrap().label_set(),
            LabelSet::singleton(PairLabel::Orbital(arc_inv))
        );
        // C ∧ C⁻¹ = C for symmetric C.
        let graph = graph_core();
        let gsig = graph.signature();
        let e = Relation::from_formula(&graph, 2, "E(1,2)").unwrap();
        assert_eq!(
            e.combine(&e.inverse_binary(gsig).unwrap(), SetOp::And).unwrap(),
            e
        );
    }

    #[test]
    fn equality_entailment_checks() {
        let core = graph_core();
        let sig = core.signature();
        let eq_rel = Relation::from_formula(&core, 2, "1=2").unwrap();
        assert!(!eq_rel.entails_no_equalities(sig));
        let full = Relation::full(&core, 2).unwrap();
        assert!(full.entails_no_equalities(sig));
        let r = alternation_relation(&core);
        assert!(r.entails_no_equalities(sig));
    }

    #[test]
    fn implication_entailment_on_alternation() {
        let core = two_cliques_core();
        let sig = core.signature();
        let r = alternation_relation(&core);
        let e = Relation::from_formula(&core, 2, "E(1,2)").unwrap();
        let n = Relation::from_formula(&core, 2, "N(1,2)").unwrap();
        let full = Relation::full(&core, 2).unwrap();
        assert!(r.entails_implication(&e, (0, 1), &n, (1, 2), sig));
        let full3 = Relation::full(&core, 3).unwrap();
        assert!(!full3.entails_implication(&e, (0, 1), &n, (1, 2), sig));
        // Anything entails the full conclusion.
        assert!(r.entails_implication(&e, (0, 1), &full, (1, 2), sig));

        // Efficient entailment needs strictness on both sides.
        assert!(r.efficiently_entails(&e, (0, 1), &n, (1, 2), sig));
        let proj = r.project(&[0, 1], sig).unwrap();
        assert!(!r.efficiently_entails(&proj, (0, 1), &n, (1, 2), sig));
    }

    #[test]
    fn exact_product_relation_is_not_efficient() {
        // R = C1(x1,x2) ∧ D1(x2,x3) exactly: projections equal the parts.
        let core = graph_core();
        let sig = core.signature();
        let r = Relation::from_formula(&core, 3, "E(1,2) & N(2,3)").unwrap();
        let e = Relation::from_formula(&core, 2, "E(1,2)").unwrap();
        let n = Relation::from_formula(&core, 2, "N(1,2)").unwrap();
        assert!(r.entails_implication(&e, (0, 1), &n, (1, 2), sig));
        assert!(!r.efficiently_entails(&e, (0, 1), &n, (1, 2), sig));
    }

    #[test]
    fn clause_relation_via_complement_matches_direct_filter() {
        let core = graph_core();
        let sig = core.signature();
        // x1≠y1 ∨ E(y1,y2) as a ternary relation over (x1, y1, y2).
        let r = Relation::from_formula(&core, 3, "1!=2 | E(2,3)").unwrap();
        let full = Relation::full(&core, 3).unwrap();
        let e = sig.by_name("E").unwrap();
        let direct: Vec<&Orbit> = full
            .orbits()
            .filter(|o| {
                o.block_of(0) != o.block_of(1)
                    || o.pair_label(1, 2, sig) == PairLabel::Orbital(e)
            })
            .collect();
        assert_eq!(r.orbit_count(), direct.len());
        for o in direct {
            assert!(r.contains(o));
        }
    }
}
