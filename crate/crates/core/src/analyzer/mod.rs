//! The hardness pipeline: critical ternary relations, bipartite implication
//! digraphs, implication completion, cycle-to-implication composition,
//! pattern detection, and whole-language analysis.

mod bipartite;
mod patterns;
mod pipeline;
mod trace;

pub use bipartite::{analyze_bipartite, build_bipartite, BipAnalysis, BipDigraph};
pub use patterns::{detect_patterns, Finding, PatternKind};
pub use pipeline::{
    cycle_to_implication, make_complete, normalize_to_fwd_back, synthesize_critical, TracedDesc,
};
pub use trace::{CriticalWitness, TraceBuilder, TraceRef, TraceStep};

use crate::binary_core::{is_liberal, max_bound, BinaryCore};
use crate::impgraph::{build_graph, find_cycle};
use crate::minimality::{eq_only_pairs, establish_minimality, Constraint, Instance};
use crate::orbits::LabelSet;
use crate::relalg::{conjunction_of_pairs, ImplicationDesc, Relation};
use crate::Result;

/// Checks every condition of the critical-ternary-relation definition:
/// disjointness, containment in the projections, the anti-reflexivity and
/// equality side conditions, both entailments, and containment of the two
/// product families. All four sub-relations must be nonempty.
pub fn is_critical_ternary(
    core: &BinaryCore,
    r: &Relation,
    c1: &Relation,
    c2: &Relation,
    d1: &Relation,
    d2: &Relation,
) -> bool {
    let sig = core.signature();
    if r.arity() != 3 {
        return false;
    }
    for s in [c1, c2, d1, d2] {
        if s.arity() != 2 || s.is_empty() {
            return false;
        }
    }
    let proj12 = r.project(&[0, 1], sig).expect("arity 3");
    let proj23 = r.project(&[1, 2], sig).expect("arity 3");
    let disjoint = |a: &Relation, b: &Relation| a.label_set().intersect(b.label_set()).is_empty();
    if !disjoint(c1, c2) || !disjoint(d1, d2) {
        return false;
    }
    if !c1.is_subset(&proj12) || !c2.is_subset(&proj12) {
        return false;
    }
    if !d1.is_subset(&proj23) || !d2.is_subset(&proj23) {
        return false;
    }
    let anti_reflexive = |s: &Relation| !s.label_set().contains_eq();
    if !anti_reflexive(c1) || !anti_reflexive(d1) {
        return false;
    }
    let is_eq = |s: &Relation| s.label_set() == LabelSet::eq_only();
    if !((anti_reflexive(c2) && anti_reflexive(d2)) || (is_eq(c2) && is_eq(d2))) {
        return false;
    }
    if !r.entails_implication(c1, (0, 1), d1, (1, 2), sig) {
        return false;
    }
    if !r.entails_implication(d1, (1, 2), c1, (0, 1), sig) {
        return false;
    }
    let family1 = conjunction_of_pairs(
        core,
        3,
        &[((0, 1), c1.label_set()), ((1, 2), d1.label_set())],
    );
    let family2 = conjunction_of_pairs(
        core,
        3,
        &[((0, 1), c2.label_set()), ((1, 2), d2.label_set())],
    );
    family1.is_subset(r) && family2.is_subset(r)
}

/// Pair patterns (one or two non-equality pairs) realized by some orbit of
/// the relation but by no injective orbit. Over a liberal core, a relation
/// with bounded strict width that entails no equalities has no such gaps, so
/// a nonempty result is a hardness diagnostic on analyzer inputs — never an
/// assumption.
pub fn injective_witness_gaps(
    relation: &Relation,
    sig: &crate::binary_core::CoreSignature,
) -> Vec<Vec<((usize, usize), crate::binary_core::OrbitalId)>> {
    use crate::orbits::PairLabel;
    let arity = relation.arity();
    let mut pairs = Vec::new();
    for j in 0..arity {
        for i in 0..j {
            pairs.push((i, j));
        }
    }
    let mut realized: std::collections::BTreeSet<Vec<((usize, usize), crate::binary_core::OrbitalId)>> =
        std::collections::BTreeSet::new();
    for orbit in relation.orbits() {
        let labeled: Vec<((usize, usize), crate::binary_core::OrbitalId)> = pairs
            .iter()
            .filter_map(|&(i, j)| match orbit.pair_label(i, j, sig) {
                PairLabel::Orbital(o) => Some(((i, j), o)),
                PairLabel::Eq => None,
            })
            .collect();
        for (a, first) in labeled.iter().enumerate() {
            realized.insert(vec![*first]);
            for second in labeled.iter().skip(a + 1) {
                realized.insert(vec![*first, *second]);
            }
        }
    }
    realized
        .into_iter()
        .filter(|pattern| {
            !relation.orbits().any(|orbit| {
                orbit.is_injective()
                    && pattern.iter().all(|&((i, j), o)| {
                        orbit.pair_label(i, j, sig) == PairLabel::Orbital(o)
                    })
            })
        })
        .collect()
}

/// Search bounds for language analysis.
#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub max_vars: usize,
    pub max_constraints: usize,
    /// Budget on the number of canonical instances analyzed.
    pub max_instances: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            max_vars: 4,
            max_constraints: 2,
            max_instances: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Coverage {
    pub instances_generated: usize,
    pub instances_analyzed: usize,
    pub truncated: bool,
    pub max_vars: usize,
    pub max_constraints: usize,
}

#[derive(Debug)]
pub enum Verdict {
    /// Every generated instance had an acyclic implication graph: relational
    /// width (2, MaxBound) behavior, conditional on language-level
    /// simplicity.
    SimpleUpToBound,
    /// A cycle was found but the core is not liberal, so no strict-width
    /// conclusion follows.
    ImplicationallyHard { instance: String },
    /// A cycle was found over a liberal core and the full pipeline produced
    /// a verified certificate.
    NoBoundedStrictWidth {
        instance: String,
        witness: Box<CriticalWitness>,
    },
}

#[derive(Debug)]
pub struct Report {
    pub verdict: Verdict,
    pub coverage: Coverage,
}

/// Enumerates canonical instances over the language up to the search bounds,
/// minimizes each, and inspects the implication graphs. The first cycle (in
/// canonical instance order) feeds the synthesis pipeline.
pub fn analyze_language(
    core: &BinaryCore,
    language: &[(String, Relation)],
    options: SearchOptions,
) -> Result<Report> {
    let sig = core.signature();
    let l = max_bound(core);
    let instances = crate::generator::canonical_instances(
        language,
        options.max_vars,
        options.max_constraints.min(2),
    )?;
    let generated = instances.len();
    let mut analyzed = 0usize;
    let truncated = generated > options.max_instances;

    for (idx, inst) in instances.iter().take(options.max_instances).enumerate() {
        analyzed += 1;
        let outcome = establish_minimality(inst, 2, l, core)?;
        if outcome.trivial {
            continue;
        }
        // Quotient equality-only pairs until the graph precondition holds.
        let mut current = outcome.instance;
        loop {
            let eq_pairs = eq_only_pairs(&current, sig)?;
            if eq_pairs.is_empty() {
                break;
            }
            let mut class_of: Vec<usize> = (0..current.variables.len()).collect();
            for &(a, b) in &eq_pairs {
                let (ra, rb) = (class_of[a].min(class_of[b]), class_of[a].max(class_of[b]));
                for c in class_of.iter_mut() {
                    if *c == rb {
                        *c = ra;
                    }
                }
            }
            // Densify ids.
            let mut dense: Vec<usize> = Vec::new();
            let class_of: Vec<usize> = class_of
                .iter()
                .map(|c| match dense.iter().position(|d| d == c) {
                    Some(i) => i,
                    None => {
                        dense.push(*c);
                        dense.len() - 1
                    }
                })
                .collect();
            current = crate::minimality::quotient_instance(&current, &class_of, sig)?;
            let outcome = establish_minimality(&current, 2, l, core)?;
            if outcome.trivial {
                break;
            }
            current = outcome.instance;
        }
        if current.is_trivial() {
            continue;
        }
        let graph = build_graph(&current, core)?;
        let Some(cycle) = find_cycle(&graph) else {
            continue;
        };
        let instance_id = describe_instance(idx, &current);
        if !is_liberal(core) {
            return Ok(Report {
                verdict: Verdict::ImplicationallyHard { instance: instance_id },
                coverage: Coverage {
                    instances_generated: generated,
                    instances_analyzed: analyzed,
                    truncated,
                    max_vars: options.max_vars,
                    max_constraints: options.max_constraints,
                },
            });
        }
        let mut tb = TraceBuilder::new();
        let composed = cycle_to_implication(core, &current, &graph, &cycle, &mut tb)?;
        let complete =
            pipeline::make_complete(core, &composed.desc, &composed.desc, &mut tb, composed.rel, composed.rel)?;
        let witness = synthesize_critical(core, &complete, &mut tb)?;
        return Ok(Report {
            verdict: Verdict::NoBoundedStrictWidth {
                instance: instance_id,
                witness: Box::new(witness),
            },
            coverage: Coverage {
                instances_generated: generated,
                instances_analyzed: analyzed,
                truncated,
                max_vars: options.max_vars,
                max_constraints: options.max_constraints,
            },
        });
    }
    Ok(Report {
        verdict: Verdict::SimpleUpToBound,
        coverage: Coverage {
            instances_generated: generated,
            instances_analyzed: analyzed,
            truncated,
            max_vars: options.max_vars,
            max_constraints: options.max_constraints,
        },
    })
}

fn describe_instance(idx: usize, inst: &Instance) -> String {
    let constraints: Vec<String> = inst
        .constraints
        .iter()
        .map(|c: &Constraint| {
            let scope: Vec<&str> = c.scope.iter().map(|v| inst.variables[*v].as_str()).collect();
            format!("({})", scope.join(","))
        })
        .collect();
    format!("instance #{idx}: {}", constraints.join(" "))
}

/// Convenience wrapper composing a loose pair into a complete implication
/// without keeping the trace.
pub fn make_complete_untraced(
    core: &BinaryCore,
    d1: &ImplicationDesc,
    d2: &ImplicationDesc,
) -> Result<ImplicationDesc> {
    let mut tb = TraceBuilder::new();
    let r1 = tb.input("left", d1.relation.clone());
    let r2 = tb.input("right", d2.relation.clone());
    Ok(pipeline::make_complete(core, d1, d2, &mut tb, r1, r2)?.desc)
}

/// Convenience wrapper for synthesizing from a standalone descriptor.
pub fn synthesize_critical_untraced(
    core: &BinaryCore,
    desc: &ImplicationDesc,
) -> Result<CriticalWitness> {
    let mut tb = TraceBuilder::new();
    let rel = tb.input("implication", desc.relation.clone());
    let traced = TracedDesc {
        desc: desc.clone(),
        rel,
    };
    synthesize_critical(core, &traced, &mut tb)
}
