//! Replayable construction traces for critical-ternary certificates.
//!
//! A trace is a straight-line program over registered pp-templates plus the
//! relation-algebra moves that are pp-expressible (coordinate permutation,
//! intersection, conjunction with disequalities). Replaying the trace from
//! its recorded inputs and comparing against the claimed relation is the
//! certification.

use crate::binary_core::BinaryCore;
use crate::error::Error;
use crate::relalg::{template_by_id, Relation, SetOp};
use crate::Result;

/// Reference to a trace value: an input relation or an earlier step output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum TraceRef {
    Input(usize),
    Step(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceStep {
    /// Apply a registered pp-template to slot inputs.
    Template { template: String, inputs: Vec<TraceRef> },
    /// Coordinate permutation (a pp-definable variable renaming).
    Permute { input: TraceRef, perm: Vec<usize> },
    /// Projection onto the listed coordinates (existential quantification).
    Project { input: TraceRef, indices: Vec<usize> },
    /// Intersection (conjunction of two definitions over shared variables).
    Intersect { a: TraceRef, b: TraceRef },
    /// Conjunction with pairwise disequalities, pp-expressible over liberal
    /// cores through the distinctness witness.
    RestrictDistinct { input: TraceRef, pairs: Vec<(usize, usize)> },
}

/// Accumulates inputs and steps while a construction runs, keeping the
/// materialized value of every reference.
#[derive(Debug, Default)]
pub struct TraceBuilder {
    pub inputs: Vec<(String, Relation)>,
    pub steps: Vec<TraceStep>,
    values: Vec<Relation>,
}

impl TraceBuilder {
    pub fn new() -> Self {
        TraceBuilder::default()
    }

    pub fn input(&mut self, label: impl Into<String>, relation: Relation) -> TraceRef {
        self.inputs.push((label.into(), relation));
        TraceRef::Input(self.inputs.len() - 1)
    }

    pub fn value(&self, r: TraceRef) -> &Relation {
        match r {
            TraceRef::Input(i) => &self.inputs[i].1,
            TraceRef::Step(i) => &self.values[i],
        }
    }

    fn push(&mut self, step: TraceStep, value: Relation) -> TraceRef {
        self.steps.push(step);
        self.values.push(value);
        TraceRef::Step(self.values.len() - 1)
    }

    pub fn template(
        &mut self,
        core: &BinaryCore,
        template: &str,
        inputs: &[TraceRef],
    ) -> Result<TraceRef> {
        let value = apply_template(core, template, inputs, |r| self.value(r))?;
        Ok(self.push(
            TraceStep::Template {
                template: template.to_string(),
                inputs: inputs.to_vec(),
            },
            value,
        ))
    }

    pub fn permute(&mut self, core: &BinaryCore, input: TraceRef, perm: &[usize]) -> Result<TraceRef> {
        let value = self.value(input).permute(perm, core.signature())?;
        Ok(self.push(
            TraceStep::Permute {
                input,
                perm: perm.to_vec(),
            },
            value,
        ))
    }

    pub fn project(&mut self, core: &BinaryCore, input: TraceRef, indices: &[usize]) -> Result<TraceRef> {
        let value = self.value(input).project(indices, core.signature())?;
        Ok(self.push(
            TraceStep::Project {
                input,
                indices: indices.to_vec(),
            },
            value,
        ))
    }

    pub fn intersect(&mut self, a: TraceRef, b: TraceRef) -> Result<TraceRef> {
        let value = self.value(a).combine(self.value(b), SetOp::And)?;
        Ok(self.push(TraceStep::Intersect { a, b }, value))
    }

    pub fn restrict_distinct(
        &mut self,
        input: TraceRef,
        pairs: &[(usize, usize)],
    ) -> Result<TraceRef> {
        let value = restrict_distinct(self.value(input), pairs)?;
        Ok(self.push(
            TraceStep::RestrictDistinct {
                input,
                pairs: pairs.to_vec(),
            },
            value,
        ))
    }
}

fn apply_template<'a>(
    core: &BinaryCore,
    template: &str,
    inputs: &[TraceRef],
    value: impl Fn(TraceRef) -> &'a Relation,
) -> Result<Relation> {
    let template = template_by_id(template)
        .ok_or_else(|| Error::InvalidInput(format!("unknown template `{template}`")))?;
    let slots: Vec<&Relation> = inputs.iter().map(|r| value(*r)).collect();
    template.apply(core, &slots)
}

fn restrict_distinct(relation: &Relation, pairs: &[(usize, usize)]) -> Result<Relation> {
    let mut kept = Relation::empty(relation.arity());
    'orbit: for o in relation.orbits() {
        for &(i, j) in pairs {
            if i >= relation.arity() || j >= relation.arity() {
                return Err(Error::CoordinateOutOfRange {
                    index: i.max(j),
                    arity: relation.arity(),
                });
            }
            if o.block_of(i) == o.block_of(j) {
                continue 'orbit;
            }
        }
        kept.insert(o.clone())?;
    }
    Ok(kept)
}

/// A certificate that a language pp-defines a critical ternary relation.
#[derive(Debug, Clone)]
pub struct CriticalWitness {
    pub relation: Relation,
    pub c1: Relation,
    pub c2: Relation,
    pub d1: Relation,
    pub d2: Relation,
    pub inputs: Vec<(String, Relation)>,
    pub trace: Vec<TraceStep>,
    /// The trace reference that evaluates to `relation`.
    pub result: TraceRef,
    pub notes: Vec<String>,
}

impl CriticalWitness {
    /// Re-executes the trace from the recorded inputs.
    pub fn replay(&self, core: &BinaryCore) -> Result<Relation> {
        let mut values: Vec<Relation> = Vec::with_capacity(self.trace.len());
        let value = |r: TraceRef, values: &[Relation]| -> Relation {
            match r {
                TraceRef::Input(i) => self.inputs[i].1.clone(),
                TraceRef::Step(i) => values[i].clone(),
            }
        };
        for step in &self.trace {
            let out = match step {
                TraceStep::Template { template, inputs } => {
                    let slots: Vec<Relation> =
                        inputs.iter().map(|r| value(*r, &values)).collect();
                    let refs: Vec<&Relation> = slots.iter().collect();
                    template_by_id(template)
                        .ok_or_else(|| Error::InvalidInput(format!("unknown template `{template}`")))?
                        .apply(core, &refs)?
                }
                TraceStep::Permute { input, perm } => {
                    value(*input, &values).permute(perm, core.signature())?
                }
                TraceStep::Project { input, indices } => {
                    value(*input, &values).project(indices, core.signature())?
                }
                TraceStep::Intersect { a, b } => {
                    value(*a, &values).combine(&value(*b, &values), SetOp::And)?
                }
                TraceStep::RestrictDistinct { input, pairs } => {
                    restrict_distinct(&value(*input, &values), pairs)?
                }
            };
            values.push(out);
        }
        Ok(value(self.result, &values))
    }

    /// Replays the trace and checks that the result is the claimed relation
    /// and that it is critical over the recorded sub-relations.
    pub fn verify(&self, core: &BinaryCore) -> Result<bool> {
        let replayed = self.replay(core)?;
        if replayed != self.relation {
            return Ok(false);
        }
        Ok(super::is_critical_ternary(
            core,
            &self.relation,
            &self.c1,
            &self.c2,
            &self.d1,
            &self.d2,
        ))
    }
}
