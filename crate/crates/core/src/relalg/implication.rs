//! Ternary and quaternary implications: classification of relations as
//! `(C, D, C1, D1, L, P)`-implications, and their composition.

use std::collections::BTreeSet;
use std::fmt;

use crate::binary_core::{BinaryCore, CoreSignature};
use crate::error::Error;
use crate::orbits::{LabelSet, PairLabel};
use crate::relalg::{template_by_id, Relation};
use crate::Result;

/// Orientation flag for the premise (`L`) and conclusion (`P`) pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Arrow {
    Fwd,
    Back,
}

impl Arrow {
    pub fn flip(self) -> Arrow {
        match self {
            Arrow::Fwd => Arrow::Back,
            Arrow::Back => Arrow::Fwd,
        }
    }
}

impl fmt::Display for Arrow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arrow::Fwd => write!(f, "->"),
            Arrow::Back => write!(f, "<-"),
        }
    }
}

/// A classified implication: `relation` has outer projections `c` and `d`
/// (read in the `l`/`p` orientations), entails no equalities, and
/// efficiently entails `c1` at the premise pair implying `d1` at the
/// conclusion pair.
///
/// `pp_unverified` records that `c1`/`d1` were produced by the
/// union-of-orbitals over-approximation rather than matched against a list
/// of known pp-definable relations.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ImplicationDesc {
    pub l: Arrow,
    pub p: Arrow,
    pub c1: Relation,
    pub d1: Relation,
    pub c: Relation,
    pub d: Relation,
    pub relation: Relation,
    pub pp_unverified: bool,
}

impl ImplicationDesc {
    /// 0-based premise coordinates: `(0,1)` for `L = →`, `(1,0)` otherwise.
    pub fn premise_pair(&self) -> (usize, usize) {
        match self.l {
            Arrow::Fwd => (0, 1),
            Arrow::Back => (1, 0),
        }
    }

    /// 0-based conclusion coordinates, depending on arity and `P`.
    pub fn conclusion_pair(&self) -> (usize, usize) {
        match (self.relation.arity(), self.p) {
            (3, Arrow::Fwd) => (1, 2),
            (3, Arrow::Back) => (2, 1),
            (4, Arrow::Fwd) => (2, 3),
            (4, Arrow::Back) => (3, 2),
            (a, _) => unreachable!("implication arity {a}"),
        }
    }

    pub fn is_ternary(&self) -> bool {
        self.relation.arity() == 3
    }

    /// Re-checks every defining condition of the implication.
    pub fn validate(&self, sig: &CoreSignature) -> Result<()> {
        let arity = self.relation.arity();
        if arity != 3 && arity != 4 {
            return Err(Error::ImplicationPostcondition(format!(
                "arity {arity} is neither 3 nor 4"
            )));
        }
        if !self.relation.entails_no_equalities(sig) {
            return Err(Error::ImplicationPostcondition(
                "relation entails an equality".into(),
            ));
        }
        let (i, j) = self.premise_pair();
        let (k, l) = self.conclusion_pair();
        if self.relation.project(&[i, j], sig)? != self.c {
            return Err(Error::ImplicationPostcondition(
                "premise projection differs from C".into(),
            ));
        }
        if self.relation.project(&[k, l], sig)? != self.d {
            return Err(Error::ImplicationPostcondition(
                "conclusion projection differs from D".into(),
            ));
        }
        if !self
            .relation
            .efficiently_entails(&self.c1, (i, j), &self.d1, (k, l), sig)
        {
            return Err(Error::ImplicationPostcondition(
                "efficient entailment fails".into(),
            ));
        }
        Ok(())
    }

    /// Swaps the premise coordinates of a quaternary relation, flipping `L`.
    /// The sub-relations are reread in the new orientation, so `c`/`c1` are
    /// unchanged as relations. Ternary implications cannot be flipped this
    /// way: their conclusion shares a coordinate with the premise.
    pub fn flip_premise(&self, sig: &CoreSignature) -> Result<ImplicationDesc> {
        if self.relation.arity() != 4 {
            return Err(Error::InvalidInput(
                "premise flip is only defined for quaternary implications".into(),
            ));
        }
        let desc = ImplicationDesc {
            l: self.l.flip(),
            p: self.p,
            c1: self.c1.clone(),
            d1: self.d1.clone(),
            c: self.c.clone(),
            d: self.d.clone(),
            relation: self.relation.permute(&[1, 0, 2, 3], sig)?,
            pp_unverified: self.pp_unverified,
        };
        desc.validate(sig)?;
        Ok(desc)
    }

    /// Swaps the conclusion coordinates, flipping `P` (quaternary only; the
    /// ternary conclusion shares a coordinate with the premise).
    pub fn flip_conclusion(&self, sig: &CoreSignature) -> Result<ImplicationDesc> {
        if self.relation.arity() != 4 {
            return Err(Error::InvalidInput(
                "conclusion flip is only defined for quaternary implications".into(),
            ));
        }
        let desc = ImplicationDesc {
            l: self.l,
            p: self.p.flip(),
            c1: self.c1.clone(),
            d1: self.d1.clone(),
            c: self.c.clone(),
            d: self.d.clone(),
            relation: self.relation.permute(&[0, 1, 3, 2], sig)?,
            pp_unverified: self.pp_unverified,
        };
        desc.validate(sig)?;
        Ok(desc)
    }

    /// Rereads a ternary `(←,→)`-implication as a `(→,←)`-implication over
    /// the inverted projections; the relation itself is unchanged.
    pub fn reread_inverted(&self, sig: &CoreSignature) -> Result<ImplicationDesc> {
        if !(self.l == Arrow::Back && self.p == Arrow::Fwd) {
            return Err(Error::InvalidInput(
                "rereading applies to (<-,->)-implications".into(),
            ));
        }
        let desc = ImplicationDesc {
            l: Arrow::Fwd,
            p: Arrow::Back,
            c1: self.c1.inverse_binary(sig)?,
            d1: self.d1.inverse_binary(sig)?,
            c: self.c.inverse_binary(sig)?,
            d: self.d.inverse_binary(sig)?,
            relation: self.relation.clone(),
            pp_unverified: self.pp_unverified,
        };
        desc.validate(sig)?;
        Ok(desc)
    }
}

/// All `(C1, D1, L, P)` witnesses making `relation` an implication, with the
/// outer projections read off the relation in each orientation. Candidate
/// `C1`/`D1` range over all nonempty proper unions of 2-orbits strictly
/// inside the projections; descriptors whose sub-relations appear in
/// `known_pp` are marked verified.
pub fn classify_all(
    relation: &Relation,
    sig: &CoreSignature,
    known_pp: &[Relation],
) -> BTreeSet<ImplicationDesc> {
    let mut out = BTreeSet::new();
    let arity = relation.arity();
    if arity != 3 && arity != 4 {
        return out;
    }
    if !relation.entails_no_equalities(sig) {
        return out;
    }
    for l in [Arrow::Fwd, Arrow::Back] {
        let premise = match l {
            Arrow::Fwd => (0usize, 1usize),
            Arrow::Back => (1, 0),
        };
        let proj_c = relation
            .project(&[premise.0, premise.1], sig)
            .expect("premise in range");
        for p in [Arrow::Fwd, Arrow::Back] {
            let conclusion = match (arity, p) {
                (3, Arrow::Fwd) => (1usize, 2usize),
                (3, Arrow::Back) => (2, 1),
                (4, Arrow::Fwd) => (2, 3),
                (4, Arrow::Back) => (3, 2),
                _ => unreachable!(),
            };
            let proj_d = relation
                .project(&[conclusion.0, conclusion.1], sig)
                .expect("conclusion in range");
            let c_labels = proj_c.label_set();
            let d_labels = proj_d.label_set();
            // Conclusion labels reachable from each premise label.
            let premise_labels: Vec<PairLabel> = c_labels.iter().collect();
            let mut reach: Vec<LabelSet> = vec![LabelSet::EMPTY; premise_labels.len()];
            for orbit in relation.orbits() {
                let pl = orbit.pair_label(premise.0, premise.1, sig);
                let cl = orbit.pair_label(conclusion.0, conclusion.1, sig);
                let idx = premise_labels.iter().position(|c| *c == pl).unwrap();
                reach[idx].insert(cl);
            }
            let m = premise_labels.len();
            if m > 16 {
                continue;
            }
            for c1_bits in 1..((1u32 << m) - 1) {
                let mut c1_set = LabelSet::EMPTY;
                let mut needed = LabelSet::EMPTY;
                for (idx, label) in premise_labels.iter().enumerate() {
                    if c1_bits & (1 << idx) != 0 {
                        c1_set.insert(*label);
                        needed = needed.union(reach[idx]);
                    }
                }
                if !needed.is_subset(d_labels) || needed == d_labels {
                    continue;
                }
                // Every D1 between the forced conclusions and the full
                // projection (exclusive) witnesses the implication.
                let slack: Vec<PairLabel> = d_labels
                    .iter()
                    .filter(|l| !needed.contains(*l))
                    .collect();
                let extra_max = 1u32 << slack.len();
                for extra in 0..extra_max {
                    let mut d1_set = needed;
                    for (idx, label) in slack.iter().enumerate() {
                        if extra & (1 << idx) != 0 {
                            d1_set.insert(*label);
                        }
                    }
                    if d1_set == d_labels {
                        continue;
                    }
                    let c1 = Relation::from_label_set(c1_set);
                    let d1 = Relation::from_label_set(d1_set);
                    let pp_unverified =
                        !(known_pp.contains(&c1) && known_pp.contains(&d1));
                    out.insert(ImplicationDesc {
                        l,
                        p,
                        c1,
                        d1,
                        c: proj_c.clone(),
                        d: proj_d.clone(),
                        relation: relation.clone(),
                        pp_unverified,
                    });
                }
            }
        }
    }
    out
}

/// The witnesses of [`classify_all`] whose outer projections equal
/// `expected_c` and `expected_d`.
pub fn classify_implication(
    relation: &Relation,
    expected_c: &Relation,
    expected_d: &Relation,
    sig: &CoreSignature,
    known_pp: &[Relation],
) -> BTreeSet<ImplicationDesc> {
    classify_all(relation, sig, known_pp)
        .into_iter()
        .filter(|desc| &desc.c == expected_c && &desc.d == expected_d)
        .collect()
}

/// The template composing `d1` with `d2`, selected by the arities and by
/// whether `P1` and `L2` agree. Fails when the middles do not chain.
pub fn circ_template_id(d1: &ImplicationDesc, d2: &ImplicationDesc) -> Result<&'static str> {
    if d1.d != d2.c {
        return Err(Error::NotComposable(
            "middle projections disagree (D1 != C2)".into(),
        ));
    }
    if d1.d1 != d2.c1 {
        return Err(Error::NotComposable(
            "middle sub-relations disagree (D1 != C1)".into(),
        ));
    }
    let aligned = d1.p == d2.l;
    Ok(match (d1.relation.arity(), d2.relation.arity(), aligned) {
        (4, 4, true) => "compose44_aligned",
        (4, 4, false) => "bowtie_quaternary",
        (4, 3, true) => "compose43_aligned",
        (4, 3, false) => "compose43_crossed",
        (3, 4, true) => "compose34_aligned",
        (3, 4, false) => "compose34_crossed",
        (3, 3, true) => "compose33_aligned",
        (3, 3, false) => "bowtie_ternary",
        (a, b, _) => {
            return Err(Error::NotComposable(format!(
                "arities {a} and {b} are not composable"
            )))
        }
    })
}

/// Rebuilds and validates the `(C, F, C1, F1, L1, P2)` descriptor for a
/// composite relation computed externally (for example by a traced template
/// application).
pub fn circ_from_relation(
    relation: Relation,
    d1: &ImplicationDesc,
    d2: &ImplicationDesc,
    sig: &CoreSignature,
) -> Result<ImplicationDesc> {
    let desc = ImplicationDesc {
        l: d1.l,
        p: d2.p,
        c1: d1.c1.clone(),
        d1: d2.d1.clone(),
        c: d1.c.clone(),
        d: d2.d.clone(),
        relation,
        pp_unverified: d1.pp_unverified || d2.pp_unverified,
    };
    desc.validate(sig)?;
    Ok(desc)
}

/// Composes two implications along a matching middle: `d1.D = d2.C` and
/// `d1.D1 = d2.C1`. The result is validated as a
/// `(C, F, C1, F1, L1, P2)`-implication.
pub fn circ(
    core: &BinaryCore,
    d1: &ImplicationDesc,
    d2: &ImplicationDesc,
) -> Result<ImplicationDesc> {
    let template = circ_template_id(d1, d2)?;
    let relation = template_by_id(template)
        .expect("built-in template")
        .apply(core, &[&d1.relation, &d2.relation])?;
    circ_from_relation(relation, d1, d2, core.signature())
}

/// `d^{∘k}`: `k = 1` is the descriptor itself.
pub fn circ_power(core: &BinaryCore, d: &ImplicationDesc, k: usize) -> Result<ImplicationDesc> {
    if k == 0 {
        return Err(Error::InvalidInput("composition power must be positive".into()));
    }
    let mut acc = d.clone();
    for _ in 1..k {
        acc = circ(core, &acc, d)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binary_core::fixtures::*;

    fn alternation(core: &BinaryCore) -> Relation {
        Relation::from_formula(core, 3, "(E(1,2) & N(2,3)) | (N(1,2) & E(2,3))").unwrap()
    }

    fn binary(core: &BinaryCore, f: &str) -> Relation {
        Relation::from_formula(core, 2, f).unwrap()
    }

    #[test]
    fn alternation_classifies_with_singleton_witnesses() {
        let core = two_cliques_core();
        let sig = core.signature();
        let r = alternation(&core);
        let en = binary(&core, "E(1,2) | N(1,2)");
        let descs = classify_implication(&r, &en, &en, sig, &[]);
        assert!(!descs.is_empty());
        let e = binary(&core, "E(1,2)");
        let n = binary(&core, "N(1,2)");
        assert!(descs
            .iter()
            .any(|d| d.l == Arrow::Fwd && d.p == Arrow::Fwd && d.c1 == e && d.d1 == n));
        assert!(descs
            .iter()
            .any(|d| d.l == Arrow::Fwd && d.p == Arrow::Fwd && d.c1 == n && d.d1 == e));
        for d in &descs {
            d.validate(sig).unwrap();
        }
    }

    #[test]
    fn full_and_equality_relations_classify_empty() {
        let core = graph_core();
        let sig = core.signature();
        let full3 = Relation::full(&core, 3).unwrap();
        let full2 = Relation::full(&core, 2).unwrap();
        assert!(classify_implication(&full3, &full2, &full2, sig, &[]).is_empty());
        // A relation entailing an equality is never an implication.
        let eq = Relation::from_formula(&core, 3, "1=2 & E(2,3)").unwrap();
        let c = eq.project(&[0, 1], sig).unwrap();
        let d = eq.project(&[1, 2], sig).unwrap();
        assert!(classify_implication(&eq, &c, &d, sig, &[]).is_empty());
    }

    #[test]
    fn quaternary_flips_map_descriptors_to_flipped_descriptors() {
        let core = two_cliques_core();
        let sig = core.signature();
        let r = alternation(&core);
        let en = binary(&core, "E(1,2) | N(1,2)");
        let e = binary(&core, "E(1,2)");
        let n = binary(&core, "N(1,2)");
        let descs = classify_implication(&r, &en, &en, sig, &[]);
        let d1 = descs
            .iter()
            .find(|d| d.l == Arrow::Fwd && d.p == Arrow::Fwd && d.c1 == e && d.d1 == n)
            .unwrap();
        let rev = r.permute(&[2, 1, 0], sig).unwrap();
        let descs2 = classify_implication(&rev, &en, &en, sig, &[]);
        let d2 = descs2
            .iter()
            .find(|d| d.l == Arrow::Fwd && d.p == Arrow::Fwd && d.c1 == n && d.d1 == e)
            .unwrap();
        let desc = circ(&core, d1, d2).unwrap();
        let flipped = desc.flip_premise(sig).unwrap();
        assert_eq!(flipped.l, desc.l.flip());
        assert_eq!(flipped.flip_premise(sig).unwrap(), desc);
        let turned = desc.flip_conclusion(sig).unwrap();
        assert_eq!(turned.p, desc.p.flip());
        assert_eq!(turned.flip_conclusion(sig).unwrap(), desc);
    }

    #[test]
    fn ternary_composition_transfers_tuples() {
        // Compose the two-cliques pattern with its reversal along the cycle.
        let core = two_cliques_core();
        let sig = core.signature();
        let r = alternation(&core);
        let en = binary(&core, "E(1,2) | N(1,2)");
        let e = binary(&core, "E(1,2)");
        let n = binary(&core, "N(1,2)");
        let descs = classify_implication(&r, &en, &en, sig, &[]);
        let d1 = descs
            .iter()
            .find(|d| d.l == Arrow::Fwd && d.p == Arrow::Fwd && d.c1 == e && d.d1 == n)
            .unwrap();
        // The reversed relation carries N(1,2) ⟹ E(2,3).
        let rev = r.permute(&[2, 1, 0], sig).unwrap();
        let descs2 = classify_implication(&rev, &en, &en, sig, &[]);
        let d2 = descs2
            .iter()
            .find(|d| d.l == Arrow::Fwd && d.p == Arrow::Fwd && d.c1 == n && d.d1 == e)
            .unwrap();
        let composed = circ(&core, d1, d2).unwrap();
        assert_eq!(composed.l, Arrow::Fwd);
        assert_eq!(composed.p, Arrow::Fwd);
        assert_eq!(composed.c1, e);
        assert_eq!(composed.d1, e);
        // Aligned ternary composition is quaternary.
        assert_eq!(composed.relation.arity(), 4);
        composed.validate(sig).unwrap();
    }

    #[test]
    fn circ_power_one_is_identity() {
        let core = two_cliques_core();
        let sig = core.signature();
        let r = alternation(&core);
        let en = binary(&core, "E(1,2) | N(1,2)");
        let descs = classify_implication(&r, &en, &en, sig, &[]);
        let d = descs.iter().next().unwrap();
        let p1 = circ_power(&core, d, 1).unwrap();
        assert_eq!(&p1, d);
        assert_eq!(p1.relation, d.relation);
        let _ = sig;
    }

    #[test]
    fn non_composable_descriptors_are_rejected() {
        let core = two_cliques_core();
        let sig = core.signature();
        let r = alternation(&core);
        let en = binary(&core, "E(1,2) | N(1,2)");
        let e = binary(&core, "E(1,2)");
        let n = binary(&core, "N(1,2)");
        let descs = classify_implication(&r, &en, &en, sig, &[]);
        let d_en = descs.iter().find(|d| d.c1 == e && d.d1 == n).unwrap();
        // Chaining D1 = {N} into C1 = {E} does not match.
        let err = circ(&core, d_en, d_en);
        assert!(matches!(err, Err(Error::NotComposable(_))));
    }
}
