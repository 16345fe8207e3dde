//! The bipartite digraph of a pair of `(C, C1, →, ←)`-implications, its
//! strongly connected components, and the completeness check.

use std::collections::BTreeSet;

use crate::binary_core::CoreSignature;
use crate::error::Error;
use crate::orbits::PairLabel;
use crate::relalg::{Arrow, ImplicationDesc};
use crate::Result;

/// Vertices are the 2-orbits of `C`, one copy per side; arcs from the left
/// side are read off the first implication's orbit set, arcs into the left
/// side off the second's.
#[derive(Debug, Clone)]
pub struct BipDigraph {
    pub tags: Vec<PairLabel>,
    /// `left_to_right[i]` holds tag indices j with an arc `i_L → j_R`.
    pub left_to_right: Vec<BTreeSet<usize>>,
    pub right_to_left: Vec<BTreeSet<usize>>,
}

/// Vertex numbering: `0..t` is the left side, `t..2t` the right side.
impl BipDigraph {
    pub fn tag_count(&self) -> usize {
        self.tags.len()
    }

    pub fn has_arc_lr(&self, left: usize, right: usize) -> bool {
        self.left_to_right[left].contains(&right)
    }

    pub fn has_arc_rl(&self, right: usize, left: usize) -> bool {
        self.right_to_left[right].contains(&left)
    }

    pub fn is_symmetric_edge(&self, left: usize, right: usize) -> bool {
        self.has_arc_lr(left, right) && self.has_arc_rl(right, left)
    }

    fn successors(&self, v: usize) -> Vec<usize> {
        let t = self.tag_count();
        if v < t {
            self.left_to_right[v].iter().map(|j| t + j).collect()
        } else {
            self.right_to_left[v - t].iter().copied().collect()
        }
    }

    /// Length of the shortest nonempty path from `from` to `to`, if any.
    pub fn shortest_path(&self, from: usize, to: usize) -> Option<usize> {
        let mut dist = vec![usize::MAX; 2 * self.tag_count()];
        let mut queue = std::collections::VecDeque::new();
        for w in self.successors(from) {
            if dist[w] == usize::MAX {
                dist[w] = 1;
                queue.push_back(w);
            }
        }
        while let Some(v) = queue.pop_front() {
            if v == to {
                return Some(dist[v]);
            }
            for w in self.successors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        None
    }
}

fn require_pair_shape(desc: &ImplicationDesc) -> Result<()> {
    if desc.l != Arrow::Fwd || desc.p != Arrow::Back {
        return Err(Error::InvalidInput(
            "bipartite digraph needs (->,<-)-implications".into(),
        ));
    }
    if desc.c != desc.d {
        return Err(Error::InvalidInput(
            "bipartite digraph needs matching outer projections (C = D)".into(),
        ));
    }
    if desc.c1 != desc.d1 {
        return Err(Error::InvalidInput(
            "bipartite digraph needs matching sub-relations (C1 = D1)".into(),
        ));
    }
    Ok(())
}

/// Builds `B_{R1,R2}` for two `(C, C1, →, ←)`-implications over the same `C`.
pub fn build_bipartite(
    d1: &ImplicationDesc,
    d2: &ImplicationDesc,
    sig: &CoreSignature,
) -> Result<BipDigraph> {
    require_pair_shape(d1)?;
    require_pair_shape(d2)?;
    if d1.c != d2.c {
        return Err(Error::InvalidInput(
            "the two implications must share their outer projection C".into(),
        ));
    }
    let tags: Vec<PairLabel> = d1.c.label_set().iter().collect();
    let tag_index = |label: PairLabel| -> usize {
        tags.iter().position(|t| *t == label).expect("label within C")
    };
    let mut left_to_right = vec![BTreeSet::new(); tags.len()];
    let mut right_to_left = vec![BTreeSet::new(); tags.len()];
    let (pi, pj) = d1.premise_pair();
    let (qi, qj) = d1.conclusion_pair();
    for orbit in d1.relation.orbits() {
        let premise = orbit.pair_label(pi, pj, sig);
        let conclusion = orbit.pair_label(qi, qj, sig);
        left_to_right[tag_index(premise)].insert(tag_index(conclusion));
    }
    let (pi, pj) = d2.premise_pair();
    let (qi, qj) = d2.conclusion_pair();
    for orbit in d2.relation.orbits() {
        let premise = orbit.pair_label(pi, pj, sig);
        let conclusion = orbit.pair_label(qi, qj, sig);
        right_to_left[tag_index(premise)].insert(tag_index(conclusion));
    }
    Ok(BipDigraph {
        tags,
        left_to_right,
        right_to_left,
    })
}

#[derive(Debug, Clone)]
pub struct BipAnalysis {
    /// Strongly connected components as sorted vertex lists.
    pub sccs: Vec<Vec<usize>>,
    /// Indices into `sccs` with no outgoing condensation arcs.
    pub sinks: Vec<usize>,
    pub sources: Vec<usize>,
    /// Every component pairs identical left and right tag sets and is a
    /// complete bipartite digraph.
    pub complete: bool,
    /// No vertex of in-degree or out-degree zero.
    pub smooth: bool,
}

impl BipAnalysis {
    /// The tag set of a component, if it is side-balanced.
    pub fn component_tags(&self, graph: &BipDigraph, scc: usize) -> Option<Vec<usize>> {
        component_tags(graph, &self.sccs[scc])
    }
}

/// Left and right tag sets of a component, when they coincide.
fn component_tags(graph: &BipDigraph, scc: &[usize]) -> Option<Vec<usize>> {
    let t = graph.tag_count();
    let left: BTreeSet<usize> = scc.iter().filter(|v| **v < t).copied().collect();
    let right: BTreeSet<usize> = scc.iter().filter(|v| **v >= t).map(|v| v - t).collect();
    if left == right {
        Some(left.into_iter().collect())
    } else {
        None
    }
}

/// SCC decomposition (Tarjan), sink/source components, and the completeness
/// and smoothness checks.
pub fn analyze_bipartite(graph: &BipDigraph) -> BipAnalysis {
    let n = 2 * graph.tag_count();
    let mut state = Tarjan {
        graph,
        index: 0,
        indices: vec![None; n],
        lowlink: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        sccs: Vec::new(),
    };
    for v in 0..n {
        if state.indices[v].is_none() {
            state.strongconnect(v);
        }
    }
    let mut sccs = state.sccs;
    for scc in &mut sccs {
        scc.sort_unstable();
    }
    sccs.sort();
    let component_of = {
        let mut map = vec![usize::MAX; n];
        for (i, scc) in sccs.iter().enumerate() {
            for &v in scc {
                map[v] = i;
            }
        }
        map
    };
    let mut has_out = vec![false; sccs.len()];
    let mut has_in = vec![false; sccs.len()];
    for v in 0..n {
        for w in graph.successors(v) {
            if component_of[v] != component_of[w] {
                has_out[component_of[v]] = true;
                has_in[component_of[w]] = true;
            }
        }
    }
    let sinks = (0..sccs.len()).filter(|i| !has_out[*i]).collect();
    let sources = (0..sccs.len()).filter(|i| !has_in[*i]).collect();

    let mut complete = true;
    for scc in &sccs {
        match component_tags(graph, scc) {
            Some(tags) => {
                for &a in &tags {
                    for &b in &tags {
                        if !graph.is_symmetric_edge(a, b) {
                            complete = false;
                        }
                    }
                }
            }
            None => complete = false,
        }
    }
    let mut in_deg = vec![0usize; n];
    let mut out_deg = vec![0usize; n];
    for (v, out) in out_deg.iter_mut().enumerate() {
        for w in graph.successors(v) {
            *out += 1;
            in_deg[w] += 1;
        }
    }
    let smooth = (0..n).all(|v| out_deg[v] > 0 && in_deg[v] > 0);
    BipAnalysis {
        sccs,
        sinks,
        sources,
        complete,
        smooth,
    }
}

struct Tarjan<'a> {
    graph: &'a BipDigraph,
    index: usize,
    indices: Vec<Option<usize>>,
    lowlink: Vec<usize>,
    on_stack: Vec<bool>,
    stack: Vec<usize>,
    sccs: Vec<Vec<usize>>,
}

impl Tarjan<'_> {
    fn strongconnect(&mut self, v: usize) {
        self.indices[v] = Some(self.index);
        self.lowlink[v] = self.index;
        self.index += 1;
        self.stack.push(v);
        self.on_stack[v] = true;
        for w in self.graph.successors(v) {
            if self.indices[w].is_none() {
                self.strongconnect(w);
                self.lowlink[v] = self.lowlink[v].min(self.lowlink[w]);
            } else if self.on_stack[w] {
                self.lowlink[v] = self.lowlink[v].min(self.indices[w].unwrap());
            }
        }
        if self.lowlink[v] == self.indices[v].unwrap() {
            let mut scc = Vec::new();
            loop {
                let w = self.stack.pop().unwrap();
                self.on_stack[w] = false;
                scc.push(w);
                if w == v {
                    break;
                }
            }
            self.sccs.push(scc);
        }
    }
}
