//! JSON file formats: cores, languages, instances, certificates, traces,
//! graphs and reports. All documents carry a `format_version` field; keys
//! are emitted in sorted order so identical inputs produce byte-identical
//! outputs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analyzer::{Coverage, CriticalWitness, Report, TraceStep, Verdict};
use crate::binary_core::{BinaryCore, CoreSignature, Diagnostic, FiniteStructure};
use crate::error::Error;
use crate::impgraph::{Cycle, ImpGraph};
use crate::minimality::{Constraint, Instance, TraceEvent};
use crate::orbits::{canonicalize, Orbit, PairLabel};
use crate::relalg::Relation;
use crate::solver::{Certificate, SolveEvent, SolveTrace};
use crate::Result;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct CoreFile {
    pub format_version: u32,
    pub name: String,
    pub orbitals: Vec<OrbitalDef>,
    #[serde(default)]
    pub bounds: Vec<BoundDef>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OrbitalDef {
    pub name: String,
    pub inverse: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BoundDef {
    pub size: usize,
    pub labels: Vec<(usize, usize, String)>,
}

pub fn load_core(text: &str) -> Result<BinaryCore> {
    let file: CoreFile = serde_json::from_str(text)?;
    core_from_file(&file)
}

pub fn core_from_file(file: &CoreFile) -> Result<BinaryCore> {
    let pairs: Vec<(&str, &str)> = file
        .orbitals
        .iter()
        .map(|o| (o.name.as_str(), o.inverse.as_str()))
        .collect();
    let sig = CoreSignature::new(&pairs)?;
    let mut diagnostics: Vec<Diagnostic> = Vec::new();
    let mut bounds = Vec::new();
    for (bi, bound) in file.bounds.iter().enumerate() {
        let mut entries = Vec::with_capacity(bound.labels.len());
        let mut bad = false;
        for (i, j, name) in &bound.labels {
            match sig.by_name(name) {
                Some(o) => entries.push((*i, *j, o)),
                None => {
                    diagnostics.push(Diagnostic::new(
                        format!("bound[{bi}] pair ({i},{j})"),
                        format!("unknown orbital `{name}`"),
                    ));
                    bad = true;
                }
            }
        }
        if bad {
            continue;
        }
        match FiniteStructure::from_entries(bound.size, &entries, &sig) {
            Ok(structure) => bounds.push(structure),
            Err(diag) => diagnostics.push(Diagnostic::new(
                format!("bound[{bi}] {}", diag.location),
                diag.message,
            )),
        }
    }
    if !diagnostics.is_empty() {
        return Err(Error::InvalidCore(diagnostics));
    }
    BinaryCore::new(file.name.clone(), sig, bounds)
}

pub fn core_to_file(core: &BinaryCore) -> CoreFile {
    let sig = core.signature();
    CoreFile {
        format_version: FORMAT_VERSION,
        name: core.name.clone(),
        orbitals: sig
            .orbitals()
            .map(|o| OrbitalDef {
                name: sig.name(o).to_string(),
                inverse: sig.name(sig.inverse(o)).to_string(),
            })
            .collect(),
        bounds: core
            .bounds()
            .iter()
            .map(|b| BoundDef {
                size: b.point_count(),
                labels: {
                    let mut labels = Vec::new();
                    for j in 0..b.point_count() {
                        for i in 0..j {
                            labels.push((i, j, sig.name(b.label(i, j, sig)).to_string()));
                        }
                    }
                    labels
                },
            })
            .collect(),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LanguageFile {
    pub format_version: u32,
    pub relations: Vec<RelationDef>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RelationDef {
    pub name: String,
    pub arity: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbits: Option<Vec<OrbitDef>>,
}

/// Serialized orbit: canonical partition plus labels for block pairs
/// `"a,b"` with `a < b`.
#[derive(Debug, Serialize, Deserialize)]
pub struct OrbitDef {
    pub partition: Vec<usize>,
    pub labels: BTreeMap<String, String>,
}

pub fn orbit_to_def(orbit: &Orbit, sig: &CoreSignature) -> OrbitDef {
    let mut labels = BTreeMap::new();
    // Representative coordinates per block.
    let blocks = orbit.block_count();
    let mut reps = vec![usize::MAX; blocks];
    for (coord, block) in orbit.partition().iter().enumerate() {
        if reps[*block as usize] == usize::MAX {
            reps[*block as usize] = coord;
        }
    }
    for b in 1..blocks {
        for a in 0..b {
            if let PairLabel::Orbital(o) = orbit.pair_label(reps[a], reps[b], sig) {
                labels.insert(format!("{a},{b}"), sig.name(o).to_string());
            }
        }
    }
    OrbitDef {
        partition: orbit.partition().iter().map(|b| *b as usize).collect(),
        labels,
    }
}

pub fn orbit_from_def(def: &OrbitDef, sig: &CoreSignature) -> Result<Orbit> {
    // Representative coordinate per raw block id.
    let mut reps: BTreeMap<usize, usize> = BTreeMap::new();
    for (coord, block) in def.partition.iter().enumerate() {
        reps.entry(*block).or_insert(coord);
    }
    let mut labels = Vec::new();
    for (key, name) in &def.labels {
        let (a, b) = key
            .split_once(',')
            .ok_or_else(|| Error::InvalidInput(format!("bad block pair key `{key}`")))?;
        let a: usize = a
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad block pair key `{key}`")))?;
        let b: usize = b
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad block pair key `{key}`")))?;
        let orbital = sig
            .by_name(name)
            .ok_or_else(|| Error::UnknownOrbital(name.clone()))?;
        let (ra, rb) = (
            *reps
                .get(&a)
                .ok_or_else(|| Error::InvalidInput(format!("unknown block {a}")))?,
            *reps
                .get(&b)
                .ok_or_else(|| Error::InvalidInput(format!("unknown block {b}")))?,
        );
        labels.push((ra, rb, PairLabel::Orbital(orbital)));
    }
    canonicalize(def.partition.len(), &def.partition, &labels, sig)
}

pub fn relation_to_def(name: &str, relation: &Relation, sig: &CoreSignature) -> RelationDef {
    RelationDef {
        name: name.to_string(),
        arity: relation.arity(),
        formula: None,
        orbits: Some(relation.orbits().map(|o| orbit_to_def(o, sig)).collect()),
    }
}

pub fn relation_from_def(def: &RelationDef, core: &BinaryCore) -> Result<Relation> {
    match (&def.formula, &def.orbits) {
        (Some(formula), None) => Relation::from_formula(core, def.arity, formula),
        (None, Some(orbits)) => {
            let sig = core.signature();
            let mut out = Vec::with_capacity(orbits.len());
            for def in orbits {
                let orbit = orbit_from_def(def, sig)?;
                if !crate::binary_core::embeds_into_core(&orbit.quotient(), core) {
                    return Err(Error::InvalidInput(
                        "orbit quotient violates a bound of the core".into(),
                    ));
                }
                out.push(orbit);
            }
            Relation::new(def.arity, out)
        }
        _ => Err(Error::InvalidInput(format!(
            "relation `{}` must define exactly one of `formula` or `orbits`",
            def.name
        ))),
    }
}

pub fn load_language(text: &str, core: &BinaryCore) -> Result<Vec<(String, Relation)>> {
    let file: LanguageFile = serde_json::from_str(text)?;
    let mut out = Vec::with_capacity(file.relations.len());
    for def in &file.relations {
        out.push((def.name.clone(), relation_from_def(def, core)?));
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    pub format_version: u32,
    pub variables: Vec<String>,
    pub constraints: Vec<ConstraintDef>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ConstraintDef {
    pub scope: Vec<String>,
    pub relation: serde_json::Value,
}

pub fn load_instance(
    text: &str,
    core: &BinaryCore,
    language: &[(String, Relation)],
) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(text)?;
    let mut constraints = Vec::with_capacity(file.constraints.len());
    for (ci, def) in file.constraints.iter().enumerate() {
        let scope: Vec<usize> = def
            .scope
            .iter()
            .map(|name| {
                file.variables
                    .iter()
                    .position(|v| v == name)
                    .ok_or_else(|| {
                        Error::InvalidInput(format!(
                            "constraint {ci}: undeclared variable `{name}`"
                        ))
                    })
            })
            .collect::<Result<_>>()?;
        let relation = match &def.relation {
            serde_json::Value::String(name) => language
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, r)| r.clone())
                .ok_or_else(|| {
                    Error::InvalidInput(format!("constraint {ci}: undeclared relation `{name}`"))
                })?,
            inline => {
                let def: RelationDef = serde_json::from_value(inline.clone())?;
                relation_from_def(&def, core)?
            }
        };
        constraints.push(Constraint { scope, relation });
    }
    Instance::new(file.variables, constraints)
}

pub fn instance_to_file(inst: &Instance, sig: &CoreSignature) -> InstanceFile {
    InstanceFile {
        format_version: FORMAT_VERSION,
        variables: inst.variables.clone(),
        constraints: inst
            .constraints
            .iter()
            .enumerate()
            .map(|(ci, c)| ConstraintDef {
                scope: c.scope.iter().map(|v| inst.variables[*v].clone()).collect(),
                relation: serde_json::to_value(relation_to_def(
                    &format!("c{ci}"),
                    &c.relation,
                    sig,
                ))
                .expect("relation serializes"),
            })
            .collect(),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CertificateFile {
    pub format_version: u32,
    pub classes: Vec<Vec<String>>,
    pub labels: Vec<(usize, usize, String)>,
}

pub fn certificate_to_file(
    cert: &Certificate,
    inst: &Instance,
    sig: &CoreSignature,
) -> CertificateFile {
    let mut labels = Vec::new();
    for j in 0..cert.labeling.point_count() {
        for i in 0..j {
            labels.push((i, j, sig.name(cert.labeling.label(i, j, sig)).to_string()));
        }
    }
    CertificateFile {
        format_version: FORMAT_VERSION,
        classes: cert
            .classes
            .iter()
            .map(|class| class.iter().map(|v| inst.variables[*v].clone()).collect())
            .collect(),
        labels,
    }
}

pub fn certificate_from_file(
    file: &CertificateFile,
    inst: &Instance,
    sig: &CoreSignature,
) -> Result<Certificate> {
    let classes: Vec<Vec<usize>> = file
        .classes
        .iter()
        .map(|class| {
            class
                .iter()
                .map(|name| {
                    inst.variables
                        .iter()
                        .position(|v| v == name)
                        .ok_or_else(|| Error::InvalidInput(format!("unknown variable `{name}`")))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let n = classes.len();
    let mut entries = Vec::with_capacity(file.labels.len());
    for (i, j, name) in &file.labels {
        let o = sig
            .by_name(name)
            .ok_or_else(|| Error::UnknownOrbital(name.clone()))?;
        entries.push((*i, *j, o));
    }
    let labeling = FiniteStructure::from_entries(n, &entries, sig)
        .map_err(|d| Error::InvalidInput(d.to_string()))?;
    Ok(Certificate { classes, labeling })
}

/// Minimization trace as JSON lines.
pub fn trace_to_jsonl(trace: &[TraceEvent], inst: &Instance, sig: &CoreSignature) -> String {
    let mut out = String::new();
    for event in trace {
        let line = serde_json::json!({
            "step": event.step,
            "constraint": event.constraint,
            "removed_orbit": orbit_to_def(&event.removed_orbit, sig),
            "because": {
                "vars": event.because_vars.iter().map(|v| inst.variables[*v].clone()).collect::<Vec<_>>(),
                "constraint": event.because_constraint,
            },
        });
        out.push_str(&serde_json::to_string(&line).expect("serializable"));
        out.push('\n');
    }
    out
}

fn label_name(label: PairLabel, sig: &CoreSignature) -> String {
    match label {
        PairLabel::Eq => "=".to_string(),
        PairLabel::Orbital(o) => sig.name(o).to_string(),
    }
}

fn binary_names(relation: &Relation, sig: &CoreSignature) -> Vec<String> {
    relation
        .label_set()
        .iter()
        .map(|l| label_name(l, sig))
        .collect()
}

pub fn graph_to_json(
    graph: &ImpGraph,
    cycle: Option<&Cycle>,
    inst: &Instance,
    sig: &CoreSignature,
) -> serde_json::Value {
    serde_json::json!({
        "format_version": FORMAT_VERSION,
        "vertices": graph.vertices.iter().map(|v| {
            serde_json::json!({
                "pair": [inst.variables[v.pair.0], inst.variables[v.pair.1]],
                "c": binary_names(&v.c, sig),
            })
        }).collect::<Vec<_>>(),
        "arcs": graph.arcs.iter().map(|a| {
            serde_json::json!({
                "from": a.from,
                "to": a.to,
                "constraint": a.constraint,
                "vars": a.vars.iter().map(|v| inst.variables[*v].clone()).collect::<Vec<_>>(),
                "witness": {
                    "l": a.desc.l.to_string(),
                    "p": a.desc.p.to_string(),
                    "c1": binary_names(&a.desc.c1, sig),
                    "d1": binary_names(&a.desc.d1, sig),
                    "pp_unverified": a.desc.pp_unverified,
                },
            })
        }).collect::<Vec<_>>(),
        "cycle": cycle.map(|c| c.vertices.clone()),
    })
}

pub fn solve_trace_to_json(trace: &SolveTrace, sig: &CoreSignature) -> serde_json::Value {
    let events: Vec<serde_json::Value> = trace
        .events
        .iter()
        .map(|e| match e {
            SolveEvent::Minimized {
                removed_orbits,
                trivial,
            } => serde_json::json!({
                "event": "minimized",
                "removed_orbits": removed_orbits,
                "trivial": trivial,
            }),
            SolveEvent::MergedEqualVariables { groups } => serde_json::json!({
                "event": "merged_equal_variables",
                "groups": groups,
            }),
            SolveEvent::Narrowed { pair, to } => serde_json::json!({
                "event": "narrowed",
                "pair": [pair.0, pair.1],
                "to": to.iter().map(|l| label_name(*l, sig)).collect::<Vec<_>>(),
            }),
            SolveEvent::OracleFallback {
                over_approximated_narrows,
            } => serde_json::json!({
                "event": "oracle_fallback",
                "over_approximated_narrows": over_approximated_narrows,
            }),
        })
        .collect();
    serde_json::json!({
        "format_version": FORMAT_VERSION,
        "events": events,
        "orbit_removals": trace.minimization.len(),
    })
}

fn trace_ref_json(r: crate::analyzer::TraceRef) -> serde_json::Value {
    match r {
        crate::analyzer::TraceRef::Input(i) => serde_json::json!({"input": i}),
        crate::analyzer::TraceRef::Step(i) => serde_json::json!({"step": i}),
    }
}

pub fn witness_to_json(witness: &CriticalWitness, sig: &CoreSignature) -> serde_json::Value {
    let steps: Vec<serde_json::Value> = witness
        .trace
        .iter()
        .map(|s| match s {
            TraceStep::Template { template, inputs } => serde_json::json!({
                "op": "template",
                "template": template,
                "inputs": inputs.iter().map(|r| trace_ref_json(*r)).collect::<Vec<_>>(),
            }),
            TraceStep::Permute { input, perm } => serde_json::json!({
                "op": "permute", "input": trace_ref_json(*input), "perm": perm,
            }),
            TraceStep::Project { input, indices } => serde_json::json!({
                "op": "project", "input": trace_ref_json(*input), "indices": indices,
            }),
            TraceStep::Intersect { a, b } => serde_json::json!({
                "op": "intersect", "a": trace_ref_json(*a), "b": trace_ref_json(*b),
            }),
            TraceStep::RestrictDistinct { input, pairs } => serde_json::json!({
                "op": "restrict_distinct", "input": trace_ref_json(*input), "pairs": pairs,
            }),
        })
        .collect();
    serde_json::json!({
        "relation": serde_json::to_value(relation_to_def("witness", &witness.relation, sig)).unwrap(),
        "c1": binary_names(&witness.c1, sig),
        "c2": binary_names(&witness.c2, sig),
        "d1": binary_names(&witness.d1, sig),
        "d2": binary_names(&witness.d2, sig),
        "inputs": witness.inputs.iter().map(|(label, r)| serde_json::json!({
            "label": label,
            "relation": serde_json::to_value(relation_to_def(label, r, sig)).unwrap(),
        })).collect::<Vec<_>>(),
        "trace": steps,
        "result": trace_ref_json(witness.result),
        "notes": witness.notes,
    })
}

pub fn report_to_json(report: &Report, sig: &CoreSignature) -> serde_json::Value {
    let (verdict, evidence) = match &report.verdict {
        Verdict::SimpleUpToBound => (
            serde_json::json!({
                "kind": "implicationally simple up to bound",
                "note": "relational width (2, MaxBound), conditional on language-level simplicity",
            }),
            serde_json::json!(null),
        ),
        Verdict::ImplicationallyHard { instance } => (
            serde_json::json!({
                "kind": "implicationally hard",
                "note": "no strict-width conclusion: the core is not liberal",
            }),
            serde_json::json!({ "instance": instance }),
        ),
        Verdict::NoBoundedStrictWidth { instance, witness } => (
            serde_json::json!({ "kind": "no bounded strict width" }),
            serde_json::json!({
                "instance": instance,
                "witness": witness_to_json(witness, sig),
            }),
        ),
    };
    let Coverage {
        instances_generated,
        instances_analyzed,
        truncated,
        max_vars,
        max_constraints,
    } = &report.coverage;
    serde_json::json!({
        "format_version": FORMAT_VERSION,
        "verdict": verdict,
        "evidence": evidence,
        "search_coverage": {
            "instances_generated": instances_generated,
            "instances_analyzed": instances_analyzed,
            "truncated": truncated,
            "max_vars": max_vars,
            "max_constraints": max_constraints,
        },
    })
}
