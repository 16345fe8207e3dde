//! From a cycle in the implication graph to a verified critical-ternary
//! certificate: composition along the cycle, normalization to a
//! `(→,←)`-implication, completion, and the final synthesis.

use crate::analyzer::bipartite::{analyze_bipartite, build_bipartite};
use crate::analyzer::trace::{CriticalWitness, TraceBuilder, TraceRef};
use crate::analyzer::is_critical_ternary;
use crate::binary_core::{is_liberal, BinaryCore};
use crate::error::Error;
use crate::impgraph::{Cycle, ImpGraph};
use crate::minimality::Instance;
use crate::orbits::{LabelSet, PairLabel};
use crate::relalg::{
    circ_from_relation, circ_template_id, Arrow, ImplicationDesc, Relation,
};
use crate::Result;

/// An implication descriptor paired with the trace reference of its relation.
#[derive(Debug, Clone)]
pub struct TracedDesc {
    pub desc: ImplicationDesc,
    pub rel: TraceRef,
}

fn circ_traced(
    core: &BinaryCore,
    tb: &mut TraceBuilder,
    a: &TracedDesc,
    b: &TracedDesc,
) -> Result<TracedDesc> {
    let template = circ_template_id(&a.desc, &b.desc)?;
    let rel = tb.template(core, template, &[a.rel, b.rel])?;
    let desc = circ_from_relation(tb.value(rel).clone(), &a.desc, &b.desc, core.signature())?;
    Ok(TracedDesc { desc, rel })
}

/// Composes the implications along a cycle of the implication graph and
/// normalizes the result into a `(→,←)`-implication over `C = D`, `C1 = D1`.
/// Ternary `(→,→)`/`(←,←)` results are squared into quaternary form first.
pub fn cycle_to_implication(
    core: &BinaryCore,
    inst: &Instance,
    graph: &ImpGraph,
    cycle: &Cycle,
    tb: &mut TraceBuilder,
) -> Result<TracedDesc> {
    if cycle.arcs.is_empty() {
        return Err(Error::InvalidInput("empty cycle".into()));
    }
    let mut chain: Vec<TracedDesc> = Vec::with_capacity(cycle.arcs.len());
    for &arc_idx in &cycle.arcs {
        let arc = &graph.arcs[arc_idx];
        let label = format!(
            "projection of constraint {} onto ({})",
            arc.constraint,
            arc.vars
                .iter()
                .map(|v| inst.variables[*v].as_str())
                .collect::<Vec<_>>()
                .join(",")
        );
        let rel = tb.input(label, arc.desc.relation.clone());
        chain.push(TracedDesc {
            desc: arc.desc.clone(),
            rel,
        });
    }
    let mut acc = chain[0].clone();
    for next in &chain[1..] {
        acc = circ_traced(core, tb, &acc, next)?;
    }
    normalize_to_fwd_back(core, tb, acc)
}

/// Rewrites an implication into the `(→,←)` orientation: rereading for the
/// ternary `(←,→)` case, squaring for ternary `(→,→)`/`(←,←)`, coordinate
/// flips for quaternary orientations.
pub fn normalize_to_fwd_back(
    core: &BinaryCore,
    tb: &mut TraceBuilder,
    traced: TracedDesc,
) -> Result<TracedDesc> {
    let sig = core.signature();
    let desc = &traced.desc;
    if desc.is_ternary() {
        match (desc.l, desc.p) {
            (Arrow::Fwd, Arrow::Back) => return Ok(traced),
            (Arrow::Back, Arrow::Fwd) => {
                // The same relation reread over inverted projections.
                let desc = desc.reread_inverted(sig)?;
                return Ok(TracedDesc {
                    desc,
                    rel: traced.rel,
                });
            }
            _ => {
                // Square into a quaternary implication and continue below.
                let squared = circ_traced(core, tb, &traced, &traced)?;
                return normalize_to_fwd_back(core, tb, squared);
            }
        }
    }
    let mut current = traced;
    if current.desc.l == Arrow::Back {
        let rel = tb.permute(core, current.rel, &[1, 0, 2, 3])?;
        let desc = current.desc.flip_premise(sig)?;
        debug_assert_eq!(&desc.relation, tb.value(rel));
        current = TracedDesc { desc, rel };
    }
    if current.desc.p == Arrow::Fwd {
        let rel = tb.permute(core, current.rel, &[0, 1, 3, 2])?;
        let desc = current.desc.flip_conclusion(sig)?;
        debug_assert_eq!(&desc.relation, tb.value(rel));
        current = TracedDesc { desc, rel };
    }
    Ok(current)
}

/// Iteratively eliminates loosely connected vertex pairs (same component,
/// no symmetric edge) by composing along odd paths, then returns the
/// composition of the repaired pair. The result is asserted complete.
pub fn make_complete(
    core: &BinaryCore,
    d1: &ImplicationDesc,
    d2: &ImplicationDesc,
    tb: &mut TraceBuilder,
    r1_ref: TraceRef,
    r2_ref: TraceRef,
) -> Result<TracedDesc> {
    let sig = core.signature();
    let mut left = TracedDesc {
        desc: d1.clone(),
        rel: r1_ref,
    };
    let mut right = TracedDesc {
        desc: d2.clone(),
        rel: r2_ref,
    };
    // Each round adds one missing direction of a loose pair, so a pair with
    // both arcs absent takes two rounds.
    let tags = core.orbital_count() + 1;
    let cap = 2 * tags * tags + 2;
    let mut previous_missing = usize::MAX;
    for _ in 0..=cap {
        let graph = build_bipartite(&left.desc, &right.desc, sig)?;
        let analysis = analyze_bipartite(&graph);
        let loose = loose_pairs(&graph, &analysis);
        if loose.is_empty() {
            let result = circ_traced(core, tb, &left, &right)?;
            let check = build_bipartite(&result.desc, &result.desc, sig)?;
            if !analyze_bipartite(&check).complete {
                return Err(Error::ImplicationPostcondition(
                    "composition of a loose-free pair is not complete".into(),
                ));
            }
            return Ok(result);
        }
        let missing: usize = loose
            .iter()
            .map(|&(l, r)| {
                2 - usize::from(graph.has_arc_lr(l, r)) - usize::from(graph.has_arc_rl(r, l))
            })
            .sum();
        if missing >= previous_missing {
            return Err(Error::CompletionCap {
                cap,
                residual: format!("missing arcs stuck at {missing}"),
            });
        }
        previous_missing = missing;
        // Repair the first loose pair: add one missing arc by composing
        // along the odd path that realizes it.
        let t = graph.tag_count();
        let (l_tag, r_tag) = loose[0];
        if !graph.has_arc_lr(l_tag, r_tag) {
            let length = graph
                .shortest_path(l_tag, t + r_tag)
                .expect("same component");
            debug_assert!(length % 2 == 1 && length >= 3);
            let k = (length - 1) / 2;
            left = augment(core, tb, &left, &right, k)?;
        } else {
            let length = graph
                .shortest_path(t + r_tag, l_tag)
                .expect("same component");
            debug_assert!(length % 2 == 1 && length >= 3);
            let k = (length - 1) / 2;
            right = augment(core, tb, &right, &left, k)?;
        }
    }
    Err(Error::CompletionCap {
        cap,
        residual: "iteration budget exhausted".into(),
    })
}

/// `(a ∘ b)^{∘k} ∘ a`: adds the arc realized by an odd path of length
/// `2k + 1` while keeping every symmetric edge.
fn augment(
    core: &BinaryCore,
    tb: &mut TraceBuilder,
    a: &TracedDesc,
    b: &TracedDesc,
    k: usize,
) -> Result<TracedDesc> {
    let step = circ_traced(core, tb, a, b)?;
    let mut acc = step.clone();
    for _ in 1..k {
        acc = circ_traced(core, tb, &acc, &step)?;
    }
    circ_traced(core, tb, &acc, a)
}

/// Ordered pairs `(left tag, right tag)` in a shared component lacking a
/// symmetric edge.
fn loose_pairs(
    graph: &crate::analyzer::bipartite::BipDigraph,
    analysis: &crate::analyzer::bipartite::BipAnalysis,
) -> Vec<(usize, usize)> {
    let t = graph.tag_count();
    let mut component_of = vec![usize::MAX; 2 * t];
    for (i, scc) in analysis.sccs.iter().enumerate() {
        for &v in scc {
            component_of[v] = i;
        }
    }
    let mut out = Vec::new();
    for l_tag in 0..t {
        for r_tag in 0..t {
            if component_of[l_tag] == component_of[t + r_tag]
                && !graph.is_symmetric_edge(l_tag, r_tag)
            {
                out.push((l_tag, r_tag));
            }
        }
    }
    out
}

/// Synthesizes a critical-ternary certificate from a complete
/// `(→,←)`-implication over a liberal core, following the sink/source
/// component split of its bipartite digraph.
pub fn synthesize_critical(
    core: &BinaryCore,
    traced: &TracedDesc,
    tb: &mut TraceBuilder,
) -> Result<CriticalWitness> {
    let sig = core.signature();
    if !is_liberal(core) {
        return Err(Error::SynthesisDegraded(
            "the constructions quantify over up to 6 points and need a liberal core".into(),
        ));
    }
    let mut current = traced.clone();
    let mut notes: Vec<String> = Vec::new();

    let (mut c1_tags, mut d1_tags) = pick_components(core, &current.desc)?;

    // Cleanliness: each chosen side must be anti-reflexive or exactly `=`.
    let clean = |s: LabelSet| -> bool { !s.contains_eq() || s == LabelSet::eq_only() };
    if !clean(c1_tags) || !clean(d1_tags) {
        // Force distinctness on the premise and conclusion base pairs; this
        // removes `=` from the outer projection entirely.
        let pairs: Vec<(usize, usize)> = if current.desc.is_ternary() {
            vec![(0, 1), (1, 2)]
        } else {
            vec![(0, 1), (2, 3)]
        };
        let rel = tb.restrict_distinct(current.rel, &pairs)?;
        notes.push("restricted to distinct premise and conclusion pairs".into());
        let restricted = tb.value(rel).clone();
        let c = current.desc.c.combine(
            &Relation::from_label_set(LabelSet::eq_only()),
            crate::relalg::SetOp::Minus,
        )?;
        let c1 = Relation::from_label_set(
            current.desc.c1.label_set().intersect(c.label_set()),
        );
        let desc = ImplicationDesc {
            l: Arrow::Fwd,
            p: Arrow::Back,
            c1: c1.clone(),
            d1: c1,
            c: c.clone(),
            d: c,
            relation: restricted,
            pp_unverified: current.desc.pp_unverified,
        };
        desc.validate(sig).map_err(|e| {
            Error::SynthesisDegraded(format!("distinctness restriction broke the implication: {e}"))
        })?;
        current = TracedDesc { desc, rel };
        let check = build_bipartite(&current.desc, &current.desc, sig)?;
        if !analyze_bipartite(&check).complete {
            return Err(Error::SynthesisDegraded(
                "restricted implication lost completeness".into(),
            ));
        }
        let picked = pick_components(core, &current.desc)?;
        c1_tags = picked.0;
        d1_tags = picked.1;
        if !clean(c1_tags) || !clean(d1_tags) {
            return Err(Error::SynthesisDegraded(
                "sink/source components stayed mixed after the restriction".into(),
            ));
        }
    }

    // At least one side is anti-reflexive (they are disjoint).
    let c1_anti = !c1_tags.contains_eq();
    let d1_anti = !d1_tags.contains_eq();
    if !c1_anti && !d1_anti {
        return Err(Error::SynthesisDegraded(
            "both chosen components are equality".into(),
        ));
    }

    // R1: ternary ((R∘R)∘(R∘R)); quaternary ((R ⋈ R) ⋈₃ (R ⋈ R)).
    let r1 = if current.desc.is_ternary() {
        let inner = circ_traced(core, tb, &current, &current)?;
        circ_traced(core, tb, &inner, &inner)?.rel
    } else {
        let inner = tb.template(core, "bowtie_quaternary", &[current.rel, current.rel])?;
        tb.template(core, "bowtie3", &[inner, inner])?
    };
    // R2(x1,x2,x3) = R1(x1,x2,x3) ∩ R1(x3,x2,x1).
    let reversed = tb.permute(core, r1, &[2, 1, 0])?;
    let r2 = tb.intersect(r1, reversed)?;
    let relation = tb.value(r2).clone();

    let (c1, c2) = if c1_anti {
        (c1_tags, d1_tags)
    } else {
        (d1_tags, c1_tags)
    };
    let c1_rel = Relation::from_label_set(c1);
    let c2_rel = Relation::from_label_set(c2);
    let d1_rel = c1_rel.inverse_binary(sig)?;
    let d2_rel = c2_rel.inverse_binary(sig)?;

    if !is_critical_ternary(core, &relation, &c1_rel, &c2_rel, &d1_rel, &d2_rel) {
        return Err(Error::SynthesisDegraded(
            "synthesized relation failed the critical-ternary check".into(),
        ));
    }

    // Certify the pp-definition of the source side from the witness itself:
    // D(x1,x2) ≡ ∃x3 R2(x1,x2,x3) ∧ O⁻¹(x2,x3) for some orbital O in it.
    let source_rel = if c1_anti { &c2_rel } else { &c1_rel };
    let mut certified = false;
    for tag in source_rel.label_set().iter() {
        if let PairLabel::Orbital(o) = tag {
            let probe = Relation::from_label_set(LabelSet::singleton(
                PairLabel::Orbital(sig.inverse(o)),
            ));
            let joined = crate::relalg::exist_join(
                core,
                &[(&relation, &[0, 1, 2]), (&probe, &[1, 2])],
                &[0, 1],
            )?;
            if &joined == source_rel {
                notes.push(format!(
                    "source side definable as ∃x3 R2(x1,x2,x3) ∧ {}(x3,x2)",
                    sig.name(o)
                ));
                certified = true;
                break;
            }
        }
    }
    if !certified && source_rel.label_set() != LabelSet::eq_only() {
        return Err(Error::SynthesisDegraded(
            "source side is not recoverable from the synthesized relation".into(),
        ));
    }

    Ok(CriticalWitness {
        relation,
        c1: c1_rel,
        c2: c2_rel,
        d1: d1_rel,
        d2: d2_rel,
        inputs: tb.inputs.clone(),
        trace: tb.steps.clone(),
        result: r2,
        notes,
    })
}

/// The sink component inside the implication's `C1` side and a source
/// component disjoint from it, as tag sets.
fn pick_components(core: &BinaryCore, desc: &ImplicationDesc) -> Result<(LabelSet, LabelSet)> {
    let sig = core.signature();
    let graph = build_bipartite(desc, desc, sig)?;
    let analysis = analyze_bipartite(&graph);
    if !analysis.complete {
        return Err(Error::SynthesisDegraded(
            "implication is not complete".into(),
        ));
    }
    let c1_labels = desc.c1.label_set();
    let tag_set = |tags: &[usize]| -> LabelSet {
        let mut set = LabelSet::EMPTY;
        for &t in tags {
            set.insert(graph.tags[t]);
        }
        set
    };
    let mut sink_tags: Option<LabelSet> = None;
    for &scc in &analysis.sinks {
        if let Some(tags) = analysis.component_tags(&graph, scc) {
            let set = tag_set(&tags);
            if set.is_subset(c1_labels) {
                sink_tags = Some(set);
                break;
            }
        }
    }
    let sink_tags = sink_tags.ok_or_else(|| {
        Error::SynthesisDegraded("no sink component inside the C1 side".into())
    })?;
    let mut source_tags: Option<LabelSet> = None;
    for &scc in &analysis.sources {
        if let Some(tags) = analysis.component_tags(&graph, scc) {
            let set = tag_set(&tags);
            if set.intersect(sink_tags).is_empty() {
                source_tags = Some(set);
                break;
            }
        }
    }
    let source_tags = source_tags.ok_or_else(|| {
        Error::SynthesisDegraded("no source component disjoint from the sink".into())
    })?;
    Ok((sink_tags, source_tags))
}
