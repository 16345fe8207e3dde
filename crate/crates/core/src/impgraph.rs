//! The implication graph of a minimal instance, cycle detection, and the
//! sink-narrowing step.
//!
//! Vertices are pairs `((v1, v2), C)` with `C` a nonempty proper subset of
//! the pair domain; arcs are witnessed by ternary or quaternary implications
//! inside constraint projections. The candidate `C`-space over-approximates
//! pp-definability by taking all unions of 2-orbits, which can only add arcs:
//! a graph found acyclic here is acyclic under the stricter definition too.

use std::collections::{BTreeMap, BTreeSet};

use crate::binary_core::{BinaryCore, CoreSignature};
use crate::error::Error;
use crate::minimality::{pair_domain, verify_minimality, Instance};
use crate::orbits::{restrict_orbit, LabelSet};
use crate::relalg::{classify_all, ImplicationDesc, Relation};
use crate::Result;

/// A vertex `((v1, v2), C)` with `∅ ≠ C ⊊ I_{v1,v2}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ImpVertex {
    pub pair: (usize, usize),
    pub c: Relation,
}

/// An arc with its witnessing constraint, the ordered projection tuple, and
/// the classified implication.
#[derive(Debug, Clone)]
pub struct ImpArc {
    pub from: usize,
    pub to: usize,
    pub constraint: usize,
    pub vars: Vec<usize>,
    pub desc: ImplicationDesc,
}

#[derive(Debug, Clone)]
pub struct ImpGraph {
    pub vertices: Vec<ImpVertex>,
    pub arcs: Vec<ImpArc>,
    successors: Vec<Vec<usize>>,
}

/// Candidate `C`-space per ordered pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexSpace {
    /// All nonempty proper unions of the pair domain's 2-orbits.
    AllSubsets,
    /// Single 2-orbits only (used to test over-approximation monotonicity).
    Singletons,
}

/// A directed cycle: `vertices[0] == vertices[last]`, arc `i` connects
/// vertex `i` to vertex `i + 1`.
#[derive(Debug, Clone)]
pub struct Cycle {
    pub vertices: Vec<usize>,
    pub arcs: Vec<usize>,
}

impl ImpGraph {
    /// Assembles a graph from explicit parts, deriving the successor lists.
    pub fn from_parts(vertices: Vec<ImpVertex>, arcs: Vec<ImpArc>) -> ImpGraph {
        let mut successors = vec![Vec::new(); vertices.len()];
        for arc in &arcs {
            successors[arc.from].push(arc.to);
        }
        for succ in &mut successors {
            succ.sort_unstable();
        }
        ImpGraph {
            vertices,
            arcs,
            successors,
        }
    }

    pub fn vertex_index(&self, pair: (usize, usize), c: &Relation) -> Option<usize> {
        self.vertices
            .iter()
            .position(|v| v.pair == pair && &v.c == c)
    }

    pub fn successors(&self, vertex: usize) -> &[usize] {
        &self.successors[vertex]
    }

    pub fn out_degree(&self, vertex: usize) -> usize {
        self.successors[vertex].len()
    }
}

/// Builds the implication graph of a non-trivial minimal instance that
/// entails no equalities.
pub fn build_graph(inst: &Instance, core: &BinaryCore) -> Result<ImpGraph> {
    build_graph_with_space(inst, core, VertexSpace::AllSubsets)
}

pub fn build_graph_with_space(
    inst: &Instance,
    core: &BinaryCore,
    space: VertexSpace,
) -> Result<ImpGraph> {
    let sig = core.signature();
    if inst.is_trivial() {
        return Err(Error::InvalidInput(
            "implication graph of a trivial instance is undefined".into(),
        ));
    }
    for c in &inst.constraints {
        if !c.relation.entails_no_equalities(sig) {
            for j in 0..c.scope.len() {
                for i in 0..j {
                    if c.relation
                        .orbits()
                        .all(|o| o.block_of(i) == o.block_of(j))
                    {
                        return Err(Error::EntailsEqualities(
                            inst.variables[c.scope[i]].clone(),
                            inst.variables[c.scope[j]].clone(),
                        ));
                    }
                }
            }
        }
    }

    let n = inst.variables.len();
    // Vertices for every ordered pair with at least two 2-orbits in its
    // domain.
    let mut vertices: Vec<ImpVertex> = Vec::new();
    let mut domains: BTreeMap<(usize, usize), Relation> = BTreeMap::new();
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let domain = pair_domain(inst, x, y, sig)?;
            if domain.label_set().len() >= 2 {
                for c_set in proper_subsets(domain.label_set(), space) {
                    vertices.push(ImpVertex {
                        pair: (x, y),
                        c: Relation::from_label_set(c_set),
                    });
                }
            }
            domains.insert((x, y), domain);
        }
    }
    vertices.sort();
    let index: BTreeMap<((usize, usize), Relation), usize> = vertices
        .iter()
        .enumerate()
        .map(|(i, v)| ((v.pair, v.c.clone()), i))
        .collect();

    let mut arcs: Vec<ImpArc> = Vec::new();
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut successors: Vec<Vec<usize>> = vec![Vec::new(); vertices.len()];
    for (ci, constraint) in inst.constraints.iter().enumerate() {
        let scope = &constraint.scope;
        for width in [3usize, 4] {
            if scope.len() < width {
                continue;
            }
            for positions in ordered_tuples(scope.len(), width) {
                let vars: Vec<usize> = positions.iter().map(|p| scope[*p]).collect();
                let projection = constraint.relation.project(&positions, sig)?;
                for desc in classify_all(&projection, sig, &[]) {
                    let (pi, pj) = desc.premise_pair();
                    let (qi, qj) = desc.conclusion_pair();
                    let from_pair = (vars[pi], vars[pj]);
                    let to_pair = (vars[qi], vars[qj]);
                    if from_pair.0 == to_pair.0 && from_pair.1 == to_pair.1 {
                        continue;
                    }
                    let (Some(&from), Some(&to)) = (
                        index.get(&(from_pair, desc.c1.clone())),
                        index.get(&(to_pair, desc.d1.clone())),
                    ) else {
                        continue;
                    };
                    if seen.insert((from, to)) {
                        successors[from].push(to);
                        arcs.push(ImpArc {
                            from,
                            to,
                            constraint: ci,
                            vars: vars.clone(),
                            desc,
                        });
                    }
                }
            }
        }
    }
    for succ in &mut successors {
        succ.sort_unstable();
    }
    Ok(ImpGraph {
        vertices,
        arcs,
        successors,
    })
}

fn proper_subsets(labels: LabelSet, space: VertexSpace) -> Vec<LabelSet> {
    let members: Vec<_> = labels.iter().collect();
    let mut out = Vec::new();
    match space {
        VertexSpace::Singletons => {
            for l in members {
                out.push(LabelSet::singleton(l));
            }
        }
        VertexSpace::AllSubsets => {
            let m = members.len();
            for bits in 1..((1u32 << m) - 1) {
                let mut set = LabelSet::EMPTY;
                for (idx, l) in members.iter().enumerate() {
                    if bits & (1 << idx) != 0 {
                        set.insert(*l);
                    }
                }
                out.push(set);
            }
        }
    }
    out
}

/// Ordered tuples of `width` pairwise distinct indices below `n`.
fn ordered_tuples(n: usize, width: usize) -> Vec<Vec<usize>> {
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

/// Finds a directed cycle by three-color depth-first search; vertices are
/// explored in canonical order so the result is deterministic.
pub fn find_cycle(graph: &ImpGraph) -> Option<Cycle> {
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Gray,
        Black,
    }
    let n = graph.vertices.len();
    let mut color = vec![Color::White; n];
    let mut parent_arc: Vec<Option<usize>> = vec![None; n];

    // Arc lookup by (from, to).
    let arc_index: BTreeMap<(usize, usize), usize> = graph
        .arcs
        .iter()
        .enumerate()
        .map(|(i, a)| ((a.from, a.to), i))
        .collect();

    fn dfs(
        v: usize,
        graph: &ImpGraph,
        color: &mut [Color],
        parent_arc: &mut [Option<usize>],
        arc_index: &BTreeMap<(usize, usize), usize>,
    ) -> Option<(usize, usize)> {
        color[v] = Color::Gray;
        for &w in graph.successors(v) {
            match color[w] {
                Color::Gray => return Some((v, w)),
                Color::White => {
                    parent_arc[w] = Some(arc_index[&(v, w)]);
                    if let Some(found) = dfs(w, graph, color, parent_arc, arc_index) {
                        return Some(found);
                    }
                }
                Color::Black => {}
            }
        }
        color[v] = Color::Black;
        None
    }

    for start in 0..n {
        if color[start] == Color::White {
            if let Some((v, w)) = dfs(start, graph, &mut color, &mut parent_arc, &arc_index) {
                // Back edge v -> w closes the cycle w ->* v -> w.
                let mut rev_vertices = vec![v];
                let mut rev_arcs = Vec::new();
                let mut cur = v;
                while cur != w {
                    let arc = parent_arc[cur].expect("path back to cycle head");
                    rev_arcs.push(arc);
                    cur = graph.arcs[arc].from;
                    rev_vertices.push(cur);
                }
                rev_vertices.reverse();
                rev_arcs.reverse();
                rev_arcs.push(arc_index[&(v, w)]);
                rev_vertices.push(w);
                return Some(Cycle {
                    vertices: rev_vertices,
                    arcs: rev_arcs,
                });
            }
        }
    }
    None
}

/// A sink vertex, preferring the weakest narrowing: maximal `|C|` first,
/// anti-reflexive `C` before equality-containing ones (conjunction with the
/// disequality relation keeps the instance inside the language's
/// pp-closure), then lexicographically smallest `(pair, C)`.
pub fn find_sink_singleton(graph: &ImpGraph) -> Option<usize> {
    (0..graph.vertices.len())
        .filter(|i| graph.out_degree(*i) == 0)
        .min_by_key(|i| {
            let v = &graph.vertices[*i];
            (
                std::cmp::Reverse(v.c.orbit_count()),
                v.c.label_set().contains_eq(),
                v.pair,
                v.c.clone(),
            )
        })
}

/// Narrows the projection of every constraint containing `(v1, v2)` to `c`.
pub fn narrow(
    inst: &Instance,
    pair: (usize, usize),
    c: &Relation,
    sig: &CoreSignature,
) -> Result<Instance> {
    if c.is_empty() {
        return Err(Error::NarrowPrecondition("narrowing to the empty relation".into()));
    }
    let domain = pair_domain(inst, pair.0, pair.1, sig)?;
    if !c.is_proper_subset(&domain) {
        return Err(Error::NarrowPrecondition(format!(
            "narrowing target is not a proper nonempty subset of the pair domain ({}, {})",
            inst.variables[pair.0], inst.variables[pair.1]
        )));
    }
    let mut constraints = Vec::with_capacity(inst.constraints.len());
    for constraint in &inst.constraints {
        let narrowed = match Instance::positions(constraint, &[pair.0, pair.1]) {
            Some(positions) => {
                let mut kept = Relation::empty(constraint.relation.arity());
                for o in constraint.relation.orbits() {
                    let restricted = restrict_orbit(o, &positions, sig);
                    if c.contains(&restricted) {
                        kept.insert(o.clone())?;
                    }
                }
                crate::minimality::Constraint {
                    scope: constraint.scope.clone(),
                    relation: kept,
                }
            }
            None => constraint.clone(),
        };
        constraints.push(narrowed);
    }
    Instance::new(inst.variables.clone(), constraints)
}

/// Narrowing plus the postcondition check: the result must still be a
/// non-trivial (2,l)-minimal instance. Narrowing at a vertex that is not a
/// sink can break this, which is reported as an error.
pub fn narrow_verified(
    inst: &Instance,
    pair: (usize, usize),
    c: &Relation,
    core: &BinaryCore,
    l: usize,
) -> Result<Instance> {
    let narrowed = narrow(inst, pair, c, core.signature())?;
    if narrowed.is_trivial() {
        return Err(Error::NotMinimal(
            "narrowing produced a trivial instance; the vertex was not a sink".into(),
        ));
    }
    if !verify_minimality(&narrowed, 2, l, core.signature()) {
        return Err(Error::NotMinimal(
            "narrowing broke (2,l)-minimality; the vertex was not a sink".into(),
        ));
    }
    Ok(narrowed)
}

/// DOT rendering of the graph for offline viewing.
pub fn render_dot(graph: &ImpGraph, inst: &Instance, sig: &CoreSignature) -> String {
    let mut out = String::from("digraph implications {\n");
    let label = |v: &ImpVertex| -> String {
        let names: Vec<String> = v
            .c
            .label_set()
            .iter()
            .map(|l| match l {
                crate::orbits::PairLabel::Eq => "=".to_string(),
                crate::orbits::PairLabel::Orbital(o) => sig.name(o).to_string(),
            })
            .collect();
        format!(
            "({},{}):{{{}}}",
            inst.variables[v.pair.0],
            inst.variables[v.pair.1],
            names.join(",")
        )
    };
    for (i, v) in graph.vertices.iter().enumerate() {
        out.push_str(&format!("  v{i} [label=\"{}\"];\n", label(v)));
    }
    for arc in &graph.arcs {
        out.push_str(&format!(
            "  v{} -> v{} [label=\"c{}\"];\n",
            arc.from, arc.to, arc.constraint
        ));
    }
    out.push_str("}\n");
    out
}
