//! Finite presentations of finitely bounded homogeneous binary cores.
//!
//! A presentation consists of an orbital signature with an inverse involution
//! and a finite set of forbidden substructures (bounds). Whether the
//! presentation really describes a homogeneous structure is trusted input;
//! the module only enforces what is checkable (coherent labelings, bound
//! sizes, the involution law).

use std::fmt;

use crate::error::Error;
use crate::Result;

/// Index of an anti-reflexive orbital in a core signature.
///
/// Equality is never an `OrbitalId`; it is the distinguished pseudo-label
/// [`crate::orbits::PairLabel::Eq`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrbitalId(pub(crate) u8);

impl OrbitalId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(index: usize) -> Self {
        debug_assert!(index < 256);
        OrbitalId(index as u8)
    }
}

impl fmt::Display for OrbitalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// One validation finding with enough context to locate it.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Diagnostic {
    pub location: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(location: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// Orbital names plus the inverse involution `O ↦ O⁻¹`.
///
/// Symmetric orbitals are exactly the fixed points of the involution.
/// Asymmetric relations contribute two orbitals, so every ordered pair of
/// distinct elements carries exactly one label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreSignature {
    names: Vec<String>,
    inverse: Vec<OrbitalId>,
}

impl CoreSignature {
    /// Builds a signature from `(name, inverse-name)` pairs.
    pub fn new(orbitals: &[(&str, &str)]) -> Result<Self> {
        let names: Vec<String> = orbitals.iter().map(|(n, _)| n.to_string()).collect();
        let mut inverse = Vec::with_capacity(names.len());
        for (_, inv) in orbitals {
            let idx = names
                .iter()
                .position(|n| n == inv)
                .ok_or_else(|| Error::UnknownOrbital(inv.to_string()))?;
            inverse.push(OrbitalId::from_index(idx));
        }
        let sig = CoreSignature { names, inverse };
        let diags = sig.validate();
        if diags.is_empty() {
            Ok(sig)
        } else {
            Err(Error::InvalidCore(diags))
        }
    }

    /// A signature where every orbital is its own inverse.
    pub fn symmetric(names: &[&str]) -> Self {
        CoreSignature {
            names: names.iter().map(|n| n.to_string()).collect(),
            inverse: (0..names.len()).map(OrbitalId::from_index).collect(),
        }
    }

    pub fn orbital_count(&self) -> usize {
        self.names.len()
    }

    pub fn orbitals(&self) -> impl Iterator<Item = OrbitalId> + '_ {
        (0..self.names.len()).map(OrbitalId::from_index)
    }

    pub fn name(&self, o: OrbitalId) -> &str {
        &self.names[o.index()]
    }

    pub fn by_name(&self, name: &str) -> Option<OrbitalId> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(OrbitalId::from_index)
    }

    pub fn inverse(&self, o: OrbitalId) -> OrbitalId {
        self.inverse[o.index()]
    }

    pub fn is_symmetric(&self, o: OrbitalId) -> bool {
        self.inverse(o) == o
    }

    fn validate(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        for (i, name) in self.names.iter().enumerate() {
            if self.names[..i].contains(name) {
                diags.push(Diagnostic::new(
                    format!("orbital[{i}]"),
                    format!("duplicate orbital name `{name}`"),
                ));
            }
        }
        for o in self.orbitals() {
            let inv = self.inverse(o);
            if self.inverse(inv) != o {
                diags.push(Diagnostic::new(
                    format!("orbital `{}`", self.name(o)),
                    format!(
                        "inverse is not an involution: ({})⁻¹ = {}, ({})⁻¹ = {}",
                        self.name(o),
                        self.name(inv),
                        self.name(inv),
                        self.name(self.inverse(inv)),
                    ),
                ));
            }
        }
        diags
    }
}

fn tri_index(i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    j * (j - 1) / 2 + i
}

/// A complete orbital labeling of `n` points.
///
/// Labels are stored for pairs `i < j` only; the other direction is derived
/// through the involution, so a `FiniteStructure` is coherent by construction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FiniteStructure {
    n: usize,
    labels: Vec<OrbitalId>,
}

impl FiniteStructure {
    /// Builds a structure from upper-triangle labels in `(i, j)` order with
    /// `i < j`, listed as `(0,1), (0,2), (1,2), (0,3), …`.
    pub fn from_upper_triangle(n: usize, labels: Vec<OrbitalId>) -> Result<Self> {
        let expected = n * n.saturating_sub(1) / 2;
        if labels.len() != expected {
            return Err(Error::InvalidInput(format!(
                "structure over {n} points needs {expected} labels, got {}",
                labels.len()
            )));
        }
        Ok(FiniteStructure { n, labels })
    }

    /// Builds a structure from labeled ordered pairs, deriving and checking
    /// the opposite direction through the involution. Every pair of distinct
    /// points must be covered in at least one direction.
    pub fn from_entries(
        n: usize,
        entries: &[(usize, usize, OrbitalId)],
        sig: &CoreSignature,
    ) -> std::result::Result<Self, Diagnostic> {
        let mut labels: Vec<Option<OrbitalId>> = vec![None; n * n.saturating_sub(1) / 2];
        for &(i, j, o) in entries {
            if i >= n || j >= n {
                return Err(Diagnostic::new(
                    format!("pair ({i},{j})"),
                    format!("point out of range for size {n}"),
                ));
            }
            if i == j {
                return Err(Diagnostic::new(
                    format!("pair ({i},{j})"),
                    "orbital label on a reflexive pair",
                ));
            }
            // Normalize to the stored i < j direction.
            let (a, b, lab) = if i < j { (i, j, o) } else { (j, i, sig.inverse(o)) };
            let slot = &mut labels[tri_index(a, b)];
            match *slot {
                None => *slot = Some(lab),
                Some(prev) if prev == lab => {}
                Some(prev) => {
                    return Err(Diagnostic::new(
                        format!("pair ({i},{j})"),
                        format!(
                            "label `{}` conflicts with `{}` derived from the involution",
                            sig.name(o),
                            sig.name(if i < j { prev } else { sig.inverse(prev) }),
                        ),
                    ));
                }
            }
        }
        let mut out = Vec::with_capacity(labels.len());
        for (idx, slot) in labels.iter().enumerate() {
            match slot {
                Some(o) => out.push(*o),
                None => {
                    return Err(Diagnostic::new(
                        format!("label slot {idx}"),
                        "labeling is not total on ordered distinct pairs",
                    ));
                }
            }
        }
        Ok(FiniteStructure { n, labels: out })
    }

    pub fn point_count(&self) -> usize {
        self.n
    }

    /// The label of the ordered pair `(i, j)`, `i ≠ j`.
    pub fn label(&self, i: usize, j: usize, sig: &CoreSignature) -> OrbitalId {
        debug_assert!(i != j && i < self.n && j < self.n);
        if i < j {
            self.labels[tri_index(i, j)]
        } else {
            sig.inverse(self.labels[tri_index(j, i)])
        }
    }

    /// Upper-triangle view in storage order.
    pub fn upper_triangle(&self) -> &[OrbitalId] {
        &self.labels
    }

    /// Per-point orbital degree vectors, used for pruning in embedding search.
    fn degree_table(&self, sig: &CoreSignature) -> Vec<Vec<u16>> {
        let mut table = vec![vec![0u16; sig.orbital_count()]; self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    table[i][self.label(i, j, sig).index()] += 1;
                }
            }
        }
        table
    }
}

/// A finitely bounded homogeneous binary core presentation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryCore {
    pub name: String,
    signature: CoreSignature,
    bounds: Vec<FiniteStructure>,
}

impl BinaryCore {
    pub fn new(name: impl Into<String>, signature: CoreSignature, bounds: Vec<FiniteStructure>) -> Result<Self> {
        let core = BinaryCore {
            name: name.into(),
            signature,
            bounds,
        };
        let diags = validate_core(&core);
        if diags.is_empty() {
            Ok(core)
        } else {
            Err(Error::InvalidCore(diags))
        }
    }

    pub fn signature(&self) -> &CoreSignature {
        &self.signature
    }

    pub fn bounds(&self) -> &[FiniteStructure] {
        &self.bounds
    }

    pub fn orbital_count(&self) -> usize {
        self.signature.orbital_count()
    }
}

/// Checks the structural invariants of a core presentation. The labeling
/// model absorbs bounds of size below 3: complete coherent labelings cannot
/// violate them, so such bounds are rejected with an explanation.
pub fn validate_core(core: &BinaryCore) -> Vec<Diagnostic> {
    let mut diags = core.signature.validate();
    for (b, bound) in core.bounds.iter().enumerate() {
        if bound.point_count() < 3 {
            diags.push(Diagnostic::new(
                format!("bound[{b}]"),
                "bound size < 3 is absorbed by the labeling model",
            ));
        }
    }
    for (b1, bound1) in core.bounds.iter().enumerate() {
        for (b2, bound2) in core.bounds.iter().enumerate().skip(b1 + 1) {
            if bound1.point_count() == bound2.point_count()
                && bound_embeds(bound1, bound2, &core.signature).is_some()
                && bound_embeds(bound2, bound1, &core.signature).is_some()
            {
                diags.push(Diagnostic::new(
                    format!("bound[{b2}]"),
                    format!("isomorphic to bound[{b1}]"),
                ));
            }
        }
    }
    diags
}

/// A core is liberal when it forbids nothing of size 3 through 6; every
/// coherent labeling of at most 6 points is then realized.
pub fn is_liberal(core: &BinaryCore) -> bool {
    core.bounds
        .iter()
        .all(|b| !(3..=6).contains(&b.point_count()))
}

/// `max(3, largest bound size)`: the `l` of (2,l)-minimality downstream.
pub fn max_bound(core: &BinaryCore) -> usize {
    core.bounds
        .iter()
        .map(FiniteStructure::point_count)
        .max()
        .unwrap_or(0)
        .max(3)
}

/// Searches for an injective label-preserving map from `gamma` into `delta`.
///
/// Backtracking over point maps with degree and label pruning; candidates in
/// lexicographic order, so the returned injection is deterministic.
pub fn bound_embeds(
    gamma: &FiniteStructure,
    delta: &FiniteStructure,
    sig: &CoreSignature,
) -> Option<Vec<usize>> {
    if gamma.point_count() > delta.point_count() {
        return None;
    }
    let g_deg = gamma.degree_table(sig);
    let d_deg = delta.degree_table(sig);
    let mut map: Vec<usize> = Vec::with_capacity(gamma.point_count());
    let mut used = vec![false; delta.point_count()];

    fn rec(
        gamma: &FiniteStructure,
        delta: &FiniteStructure,
        sig: &CoreSignature,
        g_deg: &[Vec<u16>],
        d_deg: &[Vec<u16>],
        map: &mut Vec<usize>,
        used: &mut [bool],
    ) -> bool {
        let i = map.len();
        if i == gamma.point_count() {
            return true;
        }
        'cand: for d in 0..delta.point_count() {
            if used[d] {
                continue;
            }
            for o in 0..g_deg[i].len() {
                if d_deg[d][o] < g_deg[i][o] {
                    continue 'cand;
                }
            }
            for (j, &m) in map.iter().enumerate() {
                if delta.label(m, d, sig) != gamma.label(j, i, sig) {
                    continue 'cand;
                }
            }
            map.push(d);
            used[d] = true;
            if rec(gamma, delta, sig, g_deg, d_deg, map, used) {
                return true;
            }
            used[d] = false;
            map.pop();
        }
        false
    }

    if rec(gamma, delta, sig, &g_deg, &d_deg, &mut map, &mut used) {
        Some(map)
    } else {
        None
    }
}

/// A finite structure embeds into the core exactly when no bound embeds
/// into it.
pub fn embeds_into_core(delta: &FiniteStructure, core: &BinaryCore) -> bool {
    core.bounds
        .iter()
        .all(|gamma| bound_embeds(gamma, delta, &core.signature).is_none())
}

/// Extends `delta` by one point. `pinned` fixes the labels of the ordered
/// pairs `(existing, new)`; the remaining labels are resolved by lexicographic
/// first-success search over assignments that keep the extension inside the
/// core's age. Returns `None` when no completion exists.
pub fn extend_witness(
    delta: &FiniteStructure,
    pinned: &[(usize, OrbitalId)],
    core: &BinaryCore,
) -> Option<FiniteStructure> {
    let n = delta.point_count();
    let mut new_labels: Vec<Option<OrbitalId>> = vec![None; n];
    for &(p, o) in pinned {
        assert!(p < n, "pinned point out of range");
        new_labels[p] = Some(o);
    }
    let free: Vec<usize> = (0..n).filter(|p| new_labels[*p].is_none()).collect();

    fn build(delta: &FiniteStructure, new_labels: &[Option<OrbitalId>]) -> FiniteStructure {
        let n = delta.point_count();
        let mut labels = delta.upper_triangle().to_vec();
        for (p, lab) in new_labels.iter().enumerate() {
            debug_assert_eq!(tri_index(p, n), labels.len());
            labels.push(lab.expect("complete assignment"));
        }
        FiniteStructure { n: n + 1, labels }
    }

    fn rec(
        delta: &FiniteStructure,
        core: &BinaryCore,
        free: &[usize],
        new_labels: &mut Vec<Option<OrbitalId>>,
        depth: usize,
    ) -> Option<FiniteStructure> {
        if depth == free.len() {
            let candidate = build(delta, new_labels);
            if embeds_into_core(&candidate, core) {
                return Some(candidate);
            }
            return None;
        }
        for o in core.signature.orbitals() {
            new_labels[free[depth]] = Some(o);
            if let Some(found) = rec(delta, core, free, new_labels, depth + 1) {
                return Some(found);
            }
        }
        new_labels[free[depth]] = None;
        None
    }

    rec(delta, core, &free, &mut new_labels, 0)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Equality core: single symmetric orbital `neq`, no bounds.
    pub fn equality_core() -> BinaryCore {
        BinaryCore::new("equality", CoreSignature::symmetric(&["neq"]), vec![]).unwrap()
    }

    /// Random graph core: symmetric orbitals `E`, `N`, no bounds.
    pub fn graph_core() -> BinaryCore {
        BinaryCore::new("random-graph", CoreSignature::symmetric(&["E", "N"]), vec![]).unwrap()
    }

    /// Liberal digraph core: `arc`, `arc_inv`, `N`, no bounds.
    pub fn digraph_core() -> BinaryCore {
        let sig =
            CoreSignature::new(&[("arc", "arc_inv"), ("arc_inv", "arc"), ("N", "N")]).unwrap();
        BinaryCore::new("liberal-digraph", sig, vec![]).unwrap()
    }

    /// Two disjoint infinite cliques: forbids the E,E,N and N,N,N triangles.
    pub fn two_cliques_core() -> BinaryCore {
        let sig = CoreSignature::symmetric(&["E", "N"]);
        let e = sig.by_name("E").unwrap();
        let n = sig.by_name("N").unwrap();
        let een = FiniteStructure::from_upper_triangle(3, vec![e, e, n]).unwrap();
        let nnn = FiniteStructure::from_upper_triangle(3, vec![n, n, n]).unwrap();
        BinaryCore::new("two-cliques", sig, vec![een, nnn]).unwrap()
    }

    /// Henson-style digraph core forbidding one 7-point tournament.
    ///
    /// The tournament orients pair (i, j), i < j, as i → j except that the
    /// three pairs (0,1), (1,2), (2,0) form a directed triangle.
    pub fn henson_core() -> BinaryCore {
        let sig =
            CoreSignature::new(&[("arc", "arc_inv"), ("arc_inv", "arc"), ("N", "N")]).unwrap();
        BinaryCore::new("henson", sig.clone(), vec![henson_tournament(&sig)]).unwrap()
    }

    /// The 7-point tournament forbidden by [`henson_core`].
    pub fn henson_tournament(sig: &CoreSignature) -> FiniteStructure {
        let arc = sig.by_name("arc").unwrap();
        let arc_inv = sig.by_name("arc_inv").unwrap();
        let mut entries = Vec::new();
        for i in 0..7usize {
            for j in (i + 1)..7 {
                let label = if (i, j) == (0, 2) { arc_inv } else { arc };
                entries.push((i, j, label));
            }
        }
        FiniteStructure::from_entries(7, &entries, sig).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn involution_holds_on_all_fixture_cores() {
        for core in [equality_core(), graph_core(), digraph_core(), two_cliques_core(), henson_core()] {
            let sig = core.signature();
            for o in sig.orbitals() {
                assert_eq!(sig.inverse(sig.inverse(o)), o);
            }
            assert!(validate_core(&core).is_empty());
        }
    }

    #[test]
    fn asymmetric_labeling_is_rejected() {
        let sig = CoreSignature::new(&[("arc", "arc_inv"), ("arc_inv", "arc"), ("N", "N")]).unwrap();
        let arc = sig.by_name("arc").unwrap();
        // label(1,0) must be arc_inv once label(0,1) = arc.
        let err = FiniteStructure::from_entries(2, &[(0, 1, arc), (1, 0, arc)], &sig);
        assert!(err.is_err());
    }

    #[test]
    fn small_bounds_are_rejected_with_explanation() {
        let sig = CoreSignature::symmetric(&["E", "N"]);
        let e = sig.by_name("E").unwrap();
        let bound = FiniteStructure::from_upper_triangle(2, vec![e]).unwrap();
        let core = BinaryCore {
            name: "bad".into(),
            signature: sig,
            bounds: vec![bound],
        };
        let diags = validate_core(&core);
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("absorbed"));
    }

    #[test]
    fn liberality_and_max_bound() {
        assert!(is_liberal(&equality_core()));
        assert!(is_liberal(&graph_core()));
        assert!(is_liberal(&henson_core()));
        assert!(!is_liberal(&two_cliques_core()));
        assert_eq!(max_bound(&graph_core()), 3);
        assert_eq!(max_bound(&henson_core()), 7);
        assert_eq!(max_bound(&two_cliques_core()), 3);
    }

    #[test]
    fn bound_embedding_finds_planted_pattern() {
        let core = two_cliques_core();
        let sig = core.signature();
        let e = sig.by_name("E").unwrap();
        let n = sig.by_name("N").unwrap();
        let triangle = FiniteStructure::from_upper_triangle(3, vec![e, e, n]).unwrap();
        // Identity embedding into itself.
        assert_eq!(bound_embeds(&triangle, &triangle, sig), Some(vec![0, 1, 2]));
        // Planted inside a 4-point structure: points 1,2,3 carry the pattern.
        let host = FiniteStructure::from_upper_triangle(
            4,
            // pairs (0,1) (0,2) (1,2) (0,3) (1,3) (2,3)
            vec![e, e, e, e, e, n],
        )
        .unwrap();
        assert!(bound_embeds(&triangle, &host, sig).is_some());
        // An N-triangle cannot land in an E-clique.
        let n_triangle = FiniteStructure::from_upper_triangle(3, vec![n, n, n]).unwrap();
        let clique = FiniteStructure::from_upper_triangle(5, vec![e; 10]).unwrap();
        assert!(bound_embeds(&n_triangle, &clique, sig).is_none());
    }

    #[test]
    fn embeds_into_core_detects_forbidden_triangles() {
        let core = two_cliques_core();
        let sig = core.signature();
        let e = sig.by_name("E").unwrap();
        let n = sig.by_name("N").unwrap();
        let een = FiniteStructure::from_upper_triangle(3, vec![e, n, e]).unwrap();
        assert!(!embeds_into_core(&een, &core));
        let enn = FiniteStructure::from_upper_triangle(3, vec![e, n, n]).unwrap();
        assert!(embeds_into_core(&enn, &core));
        // Over a liberal core every small structure embeds.
        let liberal = graph_core();
        assert!(embeds_into_core(&een, &liberal));
        // The forbidden tournament itself does not embed into the Henson core.
        let henson = henson_core();
        assert!(!embeds_into_core(&henson_tournament(henson.signature()), &henson));
    }

    #[test]
    fn witness_extension_over_liberal_core_always_succeeds() {
        let core = graph_core();
        let sig = core.signature();
        let e = sig.by_name("E").unwrap();
        let n = sig.by_name("N").unwrap();
        let delta = FiniteStructure::from_upper_triangle(3, vec![e, n, e]).unwrap();
        let ext = extend_witness(&delta, &[(0, e), (2, n)], &core).unwrap();
        assert_eq!(ext.point_count(), 4);
        assert_eq!(ext.label(0, 3, sig), e);
        assert_eq!(ext.label(2, 3, sig), n);

        // Empty structure, one new point.
        let empty = FiniteStructure::from_upper_triangle(0, vec![]).unwrap();
        let singleton = extend_witness(&empty, &[], &core).unwrap();
        assert_eq!(singleton.point_count(), 1);
    }

    #[test]
    fn witness_extension_fails_only_when_every_completion_is_bounded() {
        let core = henson_core();
        let sig = core.signature();
        let tournament = henson_tournament(sig);
        // Take the first 6 points of the forbidden tournament and pin the new
        // point to complete it exactly.
        let mut labels = Vec::new();
        for j in 1..6usize {
            for i in 0..j {
                labels.push(tournament.label(i, j, sig));
            }
        }
        let six = FiniteStructure::from_upper_triangle(6, labels).unwrap();
        let pinned: Vec<(usize, OrbitalId)> =
            (0..6).map(|i| (i, tournament.label(i, 6, sig))).collect();
        // Every free label is pinned, and the completion is the bound itself.
        assert!(extend_witness(&six, &pinned, &core).is_none());
        // Leaving one pair free allows escaping the bound.
        let relaxed = extend_witness(&six, &pinned[..5], &core);
        assert!(relaxed.is_some());
        assert!(embeds_into_core(&relaxed.unwrap(), &core));
    }
}
